#include "fusionreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace fusionreg::io {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

// Header-checked CSV rows with their line numbers.
struct CsvRows {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvRows read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    CsvRows out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        if (out.header.empty()) {
            out.header = split(line);
            continue;
        }
        auto fields = split(line);
        if (fields.size() != out.header.size())
            throw FormatError(where(path, number) + "expected " + std::to_string(out.header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        out.rows.emplace_back(number, std::move(fields));
    }
    if (out.header.empty()) throw FormatError(path.string() + ": file is empty");
    return out;
}

void expect_header(const CsvRows& csv, const std::filesystem::path& path,
                   const std::vector<std::string>& expected) {
    if (csv.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw FormatError(where(path, 1) + "expected header '" + want + "'");
    }
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw FormatError(where(path, line) + "'" + text + "' is not a finite number");
    return v;
}

long long parse_int(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    long long v = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw FormatError(where(path, line) + "'" + text + "' is not an integer");
    return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // write then rename so readers never see a partial file
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

CurveTable read_curves_csv(const std::filesystem::path& path) {
    const CsvRows csv = read_csv(path);
    expect_header(csv, path, {"subject_id", "dim_id", "t", "value"});
    if (csv.rows.empty()) throw FormatError(path.string() + ": no data rows");

    CurveTable table;
    std::unordered_map<std::string, std::size_t> subject_index, dim_index;
    // (subject, dim) -> t -> value
    std::map<std::pair<std::size_t, std::size_t>, std::map<double, double>> cells;
    for (const auto& [line, f] : csv.rows) {
        if (f[0].empty() || f[1].empty()) throw FormatError(where(path, line) + "empty id");
        auto s = subject_index.try_emplace(f[0], table.subject_ids.size());
        if (s.second) table.subject_ids.push_back(f[0]);
        auto d = dim_index.try_emplace(f[1], table.dim_ids.size());
        if (d.second) table.dim_ids.push_back(f[1]);
        const double t = parse_double(f[2], path, line);
        const double v = parse_double(f[3], path, line);
        auto& cell = cells[{s.first->second, d.first->second}];
        if (!cell.emplace(t, v).second)
            throw FormatError(where(path, line) + "duplicate time for subject " + f[0] + ", dimension " + f[1]);
    }

    const auto& first = cells.begin()->second;
    for (const auto& [t, v] : first) table.grid.push_back(t);
    const std::size_t n = table.subject_ids.size(), p = table.dim_ids.size(), g = table.grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        Matrix values(static_cast<Index>(p), static_cast<Index>(g));
        for (std::size_t j = 0; j < p; ++j) {
            auto it = cells.find({i, j});
            if (it == cells.end())
                throw FormatError(path.string() + ": subject " + table.subject_ids[i] + " has no curve for dimension " +
                                  table.dim_ids[j]);
            if (it->second.size() != g)
                throw FormatError(path.string() + ": subject " + table.subject_ids[i] + ", dimension " +
                                  table.dim_ids[j] + " is not on the shared time grid");
            std::size_t k = 0;
            for (const auto& [t, v] : it->second) {
                if (t != table.grid[k])
                    throw FormatError(path.string() + ": subject " + table.subject_ids[i] + ", dimension " +
                                      table.dim_ids[j] + " is not on the shared time grid");
                values(static_cast<Index>(j), static_cast<Index>(k)) = v;
                ++k;
            }
        }
        table.values.push_back(std::move(values));
    }
    return table;
}

void write_curves_csv(const std::filesystem::path& path, const CurveTable& table) {
    std::ostringstream os;
    os << "subject_id,dim_id,t,value\n";
    for (std::size_t i = 0; i < table.subject_ids.size(); ++i)
        for (std::size_t j = 0; j < table.dim_ids.size(); ++j)
            for (std::size_t k = 0; k < table.grid.size(); ++k)
                os << table.subject_ids[i] << ',' << table.dim_ids[j] << ',' << format_double(table.grid[k]) << ','
                   << format_double(table.values[i](static_cast<Index>(j), static_cast<Index>(k))) << '\n';
    write_text(path, os.str());
}

CurveTable curves_from_coefficients(const std::vector<Matrix>& coeffs, const BasisSystem& basis,
                                    const std::vector<double>& grid,
                                    const std::vector<std::string>& subject_ids,
                                    const std::vector<std::string>& dim_ids) {
    require(coeffs.size() == subject_ids.size(), "one subject id per record is needed");
    CurveTable table;
    table.subject_ids = subject_ids;
    table.dim_ids = dim_ids;
    table.grid = grid;
    const Matrix phi = basis.evaluate(grid);  // G x M
    for (const auto& a : coeffs) {
        require(a.rows() == static_cast<Index>(dim_ids.size()), "one dimension id per row is needed");
        table.values.push_back(a * phi.transpose());
    }
    return table;
}

Vector read_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& subject_ids) {
    const CsvRows csv = read_csv(path);
    expect_header(csv, path, {"subject_id", "response"});
    std::unordered_map<std::string, double> values;
    for (const auto& [line, f] : csv.rows)
        if (!values.emplace(f[0], parse_double(f[1], path, line)).second)
            throw FormatError(where(path, line) + "duplicate subject " + f[0]);
    Vector y(static_cast<Index>(subject_ids.size()));
    for (std::size_t i = 0; i < subject_ids.size(); ++i) {
        auto it = values.find(subject_ids[i]);
        if (it == values.end()) throw FormatError(path.string() + ": no response for subject " + subject_ids[i]);
        y(static_cast<Index>(i)) = it->second;
    }
    return y;
}

void write_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& subject_ids,
                         const Vector& responses) {
    require(responses.size() == static_cast<Index>(subject_ids.size()), "one response per subject is needed");
    std::ostringstream os;
    os << "subject_id,response\n";
    for (std::size_t i = 0; i < subject_ids.size(); ++i)
        os << subject_ids[i] << ',' << format_double(responses(static_cast<Index>(i))) << '\n';
    write_text(path, os.str());
}

ConditionSet read_conditions_csv(const std::filesystem::path& path, Metric metric) {
    const CsvRows csv = read_csv(path);
    if (csv.header.size() < 2 || csv.header[0] != "dim_id")
        throw FormatError(where(path, 1) + "expected header 'dim_id,coord_1,...,coord_s'");
    for (std::size_t c = 1; c < csv.header.size(); ++c)
        if (csv.header[c] != "coord_" + std::to_string(c))
            throw FormatError(where(path, 1) + "column " + std::to_string(c + 1) + " should be coord_" + std::to_string(c));
    ConditionSet cs;
    cs.metric = metric;
    const Index s = static_cast<Index>(csv.header.size()) - 1;
    cs.coords.resize(static_cast<Index>(csv.rows.size()), s);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& [line, f] = csv.rows[r];
        if (std::find(cs.labels.begin(), cs.labels.end(), f[0]) != cs.labels.end())
            throw FormatError(where(path, line) + "duplicate dim_id " + f[0]);
        cs.labels.push_back(f[0]);
        for (Index c = 0; c < s; ++c) cs.coords(static_cast<Index>(r), c) = parse_double(f[c + 1], path, line);
        if (metric == Metric::GreatCircle && cs.coords.row(static_cast<Index>(r)).norm() == 0.0)
            throw FormatError(where(path, line) + "great-circle distance needs non-zero coordinates");
    }
    if (cs.p() < 2) throw FormatError(path.string() + ": at least two conditions are needed");
    return cs;
}

void write_conditions_csv(const std::filesystem::path& path, const ConditionSet& conditions) {
    std::ostringstream os;
    os << "dim_id";
    for (Index c = 0; c < conditions.coords.cols(); ++c) os << ",coord_" << c + 1;
    os << '\n';
    for (Index j = 0; j < conditions.p(); ++j) {
        os << (j < static_cast<Index>(conditions.labels.size()) ? conditions.labels[j] : std::to_string(j + 1));
        for (Index c = 0; c < conditions.coords.cols(); ++c) os << ',' << format_double(conditions.coords(j, c));
        os << '\n';
    }
    write_text(path, os.str());
}

ConditionGrouping read_groups_csv(const std::filesystem::path& path, const std::vector<std::string>& dim_ids) {
    const CsvRows csv = read_csv(path);
    expect_header(csv, path, {"dim_id", "group_id"});
    std::unordered_map<std::string, long long> group_of;
    long long k = 0;
    for (const auto& [line, f] : csv.rows) {
        const long long g = parse_int(f[1], path, line);
        if (g < 1) throw FormatError(where(path, line) + "group ids start at 1");
        if (!group_of.emplace(f[0], g).second) throw FormatError(where(path, line) + "duplicate dim_id " + f[0]);
        k = std::max(k, g);
    }
    std::vector<Index> assignment;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (const auto& id : dim_ids) {
        auto it = group_of.find(id);
        if (it == group_of.end()) throw FormatError(path.string() + ": dimension " + id + " has no group");
        assignment.push_back(static_cast<Index>(it->second - 1));
        used[static_cast<std::size_t>(it->second - 1)] = true;
    }
    if (group_of.size() != dim_ids.size()) throw FormatError(path.string() + ": groups listed for unknown dimensions");
    for (long long g = 0; g < k; ++g)
        if (!used[static_cast<std::size_t>(g)])
            throw FormatError(path.string() + ": grouping is not surjective, group " + std::to_string(g + 1) +
                              " has no members (group ids must cover 1..K)");
    return ConditionGrouping::from_assignment(std::move(assignment));
}

void write_groups_csv(const std::filesystem::path& path, const ConditionGrouping& grouping,
                      const std::vector<std::string>& dim_ids) {
    require(static_cast<Index>(dim_ids.size()) == grouping.p(), "one dimension id per condition is needed");
    std::ostringstream os;
    os << "dim_id,group_id\n";
    for (Index j = 0; j < grouping.p(); ++j) os << dim_ids[j] << ',' << grouping.assignment[j] + 1 << '\n';
    write_text(path, os.str());
}

CurveTable align_dimensions(const CurveTable& table, const std::vector<std::string>& dim_ids) {
    if (dim_ids.size() != table.dim_ids.size())
        throw FormatError("curves have " + std::to_string(table.dim_ids.size()) + " dimensions but " +
                          std::to_string(dim_ids.size()) + " were expected");
    std::vector<Index> src;
    for (const auto& id : dim_ids) {
        auto it = std::find(table.dim_ids.begin(), table.dim_ids.end(), id);
        if (it == table.dim_ids.end()) throw FormatError("curves have no dimension " + id);
        src.push_back(static_cast<Index>(it - table.dim_ids.begin()));
    }
    CurveTable out = table;
    out.dim_ids = dim_ids;
    for (std::size_t i = 0; i < table.values.size(); ++i)
        for (std::size_t j = 0; j < src.size(); ++j) out.values[i].row(static_cast<Index>(j)) = table.values[i].row(src[j]);
    return out;
}

void write_beta_curves_csv(const std::filesystem::path& path, const CoefficientFunction& beta,
                           const std::vector<std::string>& dim_ids, int grid_size) {
    require(grid_size >= 1, "grid size must be at least 1");
    require(static_cast<Index>(dim_ids.size()) == beta.coeffs.rows(), "one dimension id per row is needed");
    const double lo = beta.basis->lower(), hi = beta.basis->upper();
    std::vector<double> grid;
    for (int g = 0; g < grid_size; ++g)
        grid.push_back(grid_size == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * g / (grid_size - 1));
    const Matrix values = beta.coeffs * beta.basis->evaluate(grid).transpose();  // p x G
    std::ostringstream os;
    os << "dim_id,t,beta_value\n";
    for (Index j = 0; j < values.rows(); ++j)
        for (int g = 0; g < grid_size; ++g)
            os << dim_ids[j] << ',' << format_double(grid[g]) << ',' << format_double(values(j, g)) << '\n';
    write_text(path, os.str());
}

void write_coefficient_matrix_csv(const std::filesystem::path& path, const Matrix& b,
                                  const std::vector<std::string>& dim_ids) {
    std::ostringstream os;
    os << "dim_id";
    for (Index k = 0; k < b.cols(); ++k) os << ",b_" << k + 1;
    os << '\n';
    for (Index j = 0; j < b.rows(); ++j) {
        os << dim_ids[j];
        for (Index k = 0; k < b.cols(); ++k) os << ',' << format_double(b(j, k));
        os << '\n';
    }
    write_text(path, os.str());
}

std::string fit_to_json(const FitResult& fit, const std::vector<std::string>& dim_ids) {
    require(static_cast<Index>(dim_ids.size()) == fit.beta.coeffs.rows(), "one dimension id per row is needed");
    const BasisSystem& basis = *fit.beta.basis;
    json j;
    j["format_version"] = kFitFormatVersion;
    j["method"] = to_string(fit.method);
    j["task"] = to_string(fit.task);
    j["lambda"] = fit.lambda;
    j["alpha"] = fit.alpha;
    j["components"] = fit.components;
    j["intercept"] = fit.beta.intercept;
    j["basis"] = {{"type", "bspline"}, {"order", basis.order()}, {"size", basis.size()},
                  {"lower", basis.lower()}, {"upper", basis.upper()}};
    j["dim_ids"] = dim_ids;
    json rows = json::array();
    for (Index r = 0; r < fit.beta.coeffs.rows(); ++r) {
        std::vector<double> row(fit.beta.coeffs.cols());
        for (Index c = 0; c < fit.beta.coeffs.cols(); ++c) row[c] = fit.beta.coeffs(r, c);
        rows.push_back(row);
    }
    j["coefficients"] = rows;
    json pairs = json::array();
    for (const auto& [a, b] : fit.equality.fused_pairs) pairs.push_back({dim_ids[a], dim_ids[b]});
    j["fused_pairs"] = pairs;
    json groups = json::array();
    for (Index g : fit.equality.fused_groups) groups.push_back(g + 1);
    j["fused_groups"] = groups;
    j["equality_class"] = fit.equality.class_of;
    j["derivation"] = fit.equality.derivation;
    if (fit.grouping) {
        std::vector<Index> one_based;
        for (Index g : fit.grouping->assignment) one_based.push_back(g + 1);
        j["grouping"] = one_based;
    }
    if (fit.coding) {
        j["coding"] = {{"positive_code", fit.coding->positive_code},
                       {"negative_code", fit.coding->negative_code},
                       {"threshold", fit.coding->threshold}};
    }
    json cv = json::array();
    for (const auto& e : fit.cv_table)
        cv.push_back({{"alpha", e.alpha}, {"lambda", e.lambda}, {"components", e.components}, {"score", e.score}});
    j["cv_table"] = cv;
    j["solver"] = {{"iterations", fit.solver.iterations},
                   {"converged", fit.solver.converged},
                   {"kkt_residual", fit.solver.kkt_residual}};
    return j.dump(2) + "\n";
}

StoredFit fit_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("fit file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kFitFormatVersion)
            throw FormatError("unsupported fit format_version " + j.at("format_version").dump());
        if (!j.contains("basis")) throw FormatError("fit file has no basis metadata");
        const json& b = j.at("basis");
        if (b.at("type").get<std::string>() != "bspline") throw FormatError("unsupported basis type");
        StoredFit out;
        FitResult& fit = out.fit;
        fit.beta.basis = make_bspline_basis(b.at("order").get<int>(), b.at("size").get<Index>(),
                                            b.at("lower").get<double>(), b.at("upper").get<double>());
        fit.method = parse_method(j.at("method").get<std::string>());
        fit.task = parse_task(j.at("task").get<std::string>());
        fit.lambda = j.at("lambda").get<double>();
        fit.alpha = j.at("alpha").get<double>();
        fit.components = j.at("components").get<Index>();
        fit.beta.intercept = j.at("intercept").get<double>();
        out.dim_ids = j.at("dim_ids").get<std::vector<std::string>>();
        const auto rows = j.at("coefficients").get<std::vector<std::vector<double>>>();
        const Index m = fit.beta.basis->size();
        if (rows.size() != out.dim_ids.size()) throw FormatError("coefficient rows do not match dim_ids");
        fit.beta.coeffs.resize(static_cast<Index>(rows.size()), m);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (static_cast<Index>(rows[r].size()) != m) throw FormatError("coefficient row length differs from basis size");
            for (Index c = 0; c < m; ++c) fit.beta.coeffs(static_cast<Index>(r), c) = rows[r][c];
        }
        fit.equality.class_of = j.at("equality_class").get<std::vector<Index>>();
        if (fit.equality.class_of.size() != rows.size()) throw FormatError("equality_class has the wrong length");
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t c = a + 1; c < rows.size(); ++c)
                if (fit.equality.class_of[a] == fit.equality.class_of[c])
                    fit.equality.fused_pairs.emplace_back(static_cast<Index>(a), static_cast<Index>(c));
        for (Index g : j.at("fused_groups").get<std::vector<Index>>()) fit.equality.fused_groups.push_back(g - 1);
        fit.equality.derivation = j.at("derivation").get<std::vector<std::string>>();
        if (j.contains("grouping")) {
            std::vector<Index> assignment = j.at("grouping").get<std::vector<Index>>();
            for (auto& g : assignment) --g;
            fit.grouping = ConditionGrouping::from_assignment(std::move(assignment));
        }
        if (j.contains("coding")) {
            const json& c = j.at("coding");
            fit.coding = ClassificationCoding{c.at("positive_code").get<double>(), c.at("negative_code").get<double>(),
                                              c.at("threshold").get<double>()};
        }
        for (const json& e : j.at("cv_table"))
            fit.cv_table.push_back({e.at("alpha").get<double>(), e.at("lambda").get<double>(),
                                    e.at("components").get<Index>(), e.at("score").get<double>()});
        const json& s = j.at("solver");
        fit.solver.iterations = s.at("iterations").get<int>();
        fit.solver.converged = s.at("converged").get<bool>();
        fit.solver.kkt_residual = s.at("kkt_residual").get<double>();
        return out;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed fit file: ") + e.what());
    }
}

void write_fit_json(const std::filesystem::path& path, const FitResult& fit,
                    const std::vector<std::string>& dim_ids) {
    write_text(path, fit_to_json(fit, dim_ids));
}

StoredFit read_fit_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return fit_from_json(os.str());
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<MethodSummary>& rows) {
    std::ostringstream os;
    os << "method,MSE_mean,MSE_sd,Sens,Spec\n";
    for (const auto& r : rows)
        os << r.method << ',' << format_double(r.mse_mean) << ',' << format_double(r.mse_sd) << ','
           << format_double(r.sens) << ',' << format_double(r.spec) << '\n';
    write_text(path, os.str());
}

}  // namespace fusionreg::io
