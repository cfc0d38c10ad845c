// fusionreg: command-line front end.
//
//   simulate  generate scenario datasets and (optionally) a method comparison
//   fit       one fit at fixed hyperparameters (or --cv)
//   cv        cross-validated fit on the lambda/alpha grids
//   evaluate  score a stored fit on new curves
//   export    sample the fitted coefficient curves
//
// Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
// validation error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"
#include "fusionreg/estimators.hpp"
#include "fusionreg/io.hpp"
#include "fusionreg/simulation.hpp"

namespace fs = std::filesystem;
using namespace fusionreg;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ParameterError("'" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ParameterError("empty list");
    return out;
}

std::vector<Method> parse_method_list(const std::string& text) {
    std::vector<Method> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_method(item));
    return out;
}

struct ModelOptions {
    std::string curves;
    std::string responses;
    std::string conditions;
    std::string groups;
    std::string cluster;
    std::string method = "gful";
    std::string metric = "euclidean";
    std::string task = "regress";
    int basis_order = 4;
    int basis_size = 20;
    double lambda = -1.0;
    double alpha = 0.5;
    int components = 0;
    bool cv = false;
    int folds = 10;
    std::uint64_t seed = 1;
    std::string alpha_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    int lambda_grid_size = 150;
    std::string test_curves;
    std::string test_responses;
    std::string out = ".";
};

void add_model_options(CLI::App* cmd, ModelOptions& o, bool cv_default) {
    o.cv = cv_default;
    cmd->add_option("--curves", o.curves, "curves CSV: subject_id,dim_id,t,value")->required()->check(CLI::ExistingFile);
    cmd->add_option("--responses", o.responses, "responses CSV: subject_id,response")->required()->check(CLI::ExistingFile);
    cmd->add_option("--conditions", o.conditions, "conditions CSV: dim_id,coord_1,...")->required()->check(CLI::ExistingFile);
    cmd->add_option("--groups", o.groups, "groups CSV: dim_id,group_id")->check(CLI::ExistingFile);
    cmd->add_option("--cluster", o.cluster, "group conditions instead of --groups: kmeans:K or average:K");
    cmd->add_option("--method", o.method, "fu|gful|gl1|gl2|hg|mfpcr")
        ->check(CLI::IsMember({"fu", "gful", "gl1", "gl2", "hg", "mfpcr"}));
    cmd->add_option("--metric", o.metric, "euclidean|greatcircle")->check(CLI::IsMember({"euclidean", "greatcircle"}));
    cmd->add_option("--task", o.task, "regress|classify")->check(CLI::IsMember({"regress", "classify"}));
    cmd->add_option("--basis-order", o.basis_order, "B-spline order (4 = cubic)")->check(CLI::PositiveNumber);
    cmd->add_option("--basis-size", o.basis_size, "number of basis functions M")->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", o.lambda, "penalty level (fit without --cv)");
    cmd->add_option("--alpha", o.alpha, "GFUL mixing weight in (0, 1]");
    cmd->add_option("--components", o.components, "principal components (hg, mfpcr)");
    if (!cv_default) cmd->add_flag("--cv", o.cv, "choose hyperparameters by cross-validation");
    cmd->add_option("--folds", o.folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    cmd->add_option("--seed", o.seed, "seed for folds and clustering");
    cmd->add_option("--alpha-grid", o.alpha_grid, "comma separated GFUL alpha values");
    cmd->add_option("--lambda-grid-size", o.lambda_grid_size, "lambda grid length")->check(CLI::PositiveNumber);
    cmd->add_option("--test-curves", o.test_curves, "optional held-out curves")->check(CLI::ExistingFile);
    cmd->add_option("--test-responses", o.test_responses, "optional held-out responses")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
}

ConditionGrouping cluster_conditions(const std::string& spec, const ConditionSet& conditions, std::uint64_t seed) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ParameterError("--cluster expects kmeans:K or average:K");
    const std::string kind = spec.substr(0, colon);
    const std::string count = spec.substr(colon + 1);
    std::size_t used = 0;
    long k = 0;
    try {
        k = std::stol(count, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != count.size() || k < 1) throw ParameterError("--cluster: '" + count + "' is not a positive integer");
    if (kind == "kmeans") return kmeans_groups(conditions, k, seed);
    if (kind == "average") return agglomerative_groups(pairwise_distance(conditions), k);
    throw ParameterError("--cluster: unknown algorithm '" + kind + "' (expected kmeans or average)");
}

struct LoadedData {
    FunctionalDataset data;
    ConditionSet conditions;
    std::vector<std::string> subject_ids;
};

LoadedData load_dataset(const std::string& curves_path, const std::string& responses_path,
                        const ConditionSet& conditions, const ModelOptions& o) {
    const io::CurveTable raw = io::read_curves_csv(curves_path);
    const io::CurveTable table = io::align_dimensions(raw, conditions.labels);
    const double lo = table.grid.front(), hi = table.grid.back();
    if (!(hi > lo)) throw ParameterError("curves need at least two distinct time points");
    LoadedData out;
    out.conditions = conditions;
    out.subject_ids = table.subject_ids;
    out.data.basis = make_bspline_basis(o.basis_order, o.basis_size, lo, hi);
    out.data.coeffs = project_curves(table.grid, table.values, out.data.basis);
    out.data.responses = io::read_responses_csv(responses_path, table.subject_ids);
    return out;
}

void write_cv_table(const fs::path& path, const std::vector<CvEntry>& table) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "alpha,lambda,components,score\n";
    for (const auto& e : table)
        os << io::format_double(e.alpha) << ',' << io::format_double(e.lambda) << ',' << e.components << ','
           << io::format_double(e.score) << '\n';
}

void write_fused_pairs(const fs::path& path, const FitResult& fit, const std::vector<std::string>& dim_ids) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "j,j_prime\n";
    for (const auto& [a, b] : fit.equality.fused_pairs) os << dim_ids[a] << ',' << dim_ids[b] << '\n';
}

// Held-out score: MSE for regression, accuracy for classification.
std::string evaluate_fit(const FitResult& fit, const FunctionalDataset& data) {
    std::ostringstream os;
    if (fit.task == Task::Classify) {
        const std::vector<int> cls = predict_classes(fit, data);
        double hits = 0;
        for (Index i = 0; i < data.n(); ++i) hits += cls[i] == static_cast<int>(data.responses(i)) ? 1 : 0;
        os << "accuracy," << io::format_double(hits / static_cast<double>(data.n()));
    } else {
        const Vector pred = predict_scores(fit, data);
        os << "mse," << io::format_double((pred - data.responses).squaredNorm() / static_cast<double>(data.n()));
    }
    return os.str();
}

int run_model(const ModelOptions& o) {
    const Method method = parse_method(o.method);
    const ConditionSet conditions = io::read_conditions_csv(o.conditions, parse_metric(o.metric));
    const LoadedData loaded = load_dataset(o.curves, o.responses, conditions, o);

    MethodConfig config;
    config.method = method;
    config.task = parse_task(o.task);
    config.conditions = conditions;
    config.lambda_grid_size = o.lambda_grid_size;
    config.alpha_grid = parse_double_list(o.alpha_grid);
    config.cv_solver = experiment_cv_solver();
    if (!o.groups.empty() && !o.cluster.empty()) throw ParameterError("use either --groups or --cluster, not both");
    if (!o.groups.empty()) config.grouping = io::read_groups_csv(o.groups, conditions.labels);
    if (!o.cluster.empty()) config.grouping = cluster_conditions(o.cluster, conditions, o.seed);
    const bool needs_groups = method == Method::GFUL || method == Method::GL2 || method == Method::HG;
    if (needs_groups && !config.grouping)
        throw ParameterError(o.method + " needs --groups or --cluster");

    FitResult fit;
    if (o.cv) {
        fit = fit_cv(loaded.data, config, o.folds, o.seed);
    } else {
        Hyperparameters h;
        h.alpha = o.alpha;
        h.components = o.components;
        if (is_penalized(method)) {
            if (o.lambda < 0.0) throw ParameterError("--lambda is required without --cv");
            h.lambda = o.lambda;
        } else if (o.components < 1) {
            throw ParameterError("--components is required for " + o.method + " without --cv");
        }
        fit = fusionreg::fit(loaded.data, config, h);
    }

    const fs::path out(o.out);
    fs::create_directories(out);
    io::write_fit_json(out / "fit.json", fit, conditions.labels);
    io::write_coefficient_matrix_csv(out / "coefficients.csv", fit.beta.coeffs, conditions.labels);
    write_fused_pairs(out / "fused_pairs.csv", fit, conditions.labels);
    if (config.grouping) io::write_groups_csv(out / "groups.csv", *config.grouping, conditions.labels);
    if (!fit.cv_table.empty()) write_cv_table(out / "cv_table.csv", fit.cv_table);

    std::cout << "method " << o.method << ", lambda " << fit.lambda;
    if (method == Method::GFUL) std::cout << ", alpha " << fit.alpha;
    if (!is_penalized(method)) std::cout << ", components " << fit.components;
    std::cout << ", fused pairs " << fit.equality.fused_pairs.size() << ", fused groups "
              << fit.equality.fused_groups.size() << "\n";
    std::cout << "training " << evaluate_fit(fit, loaded.data) << "\n";

    if (!o.test_curves.empty() || !o.test_responses.empty()) {
        if (o.test_curves.empty() || o.test_responses.empty())
            throw ParameterError("--test-curves and --test-responses go together");
        const LoadedData test = load_dataset(o.test_curves, o.test_responses, conditions, o);
        const std::string line = evaluate_fit(fit, test.data);
        std::cout << "test " << line << "\n";
        std::ofstream os(out / "evaluation.csv");
        os << "metric,value\n" << line << '\n';
    }
    return 0;
}

struct SimulateOptions {
    std::string scenario = "s1";
    int replicates = 20;
    std::uint64_t seed = 1;
    long n_total = 250;
    std::string methods;
    int folds = 10;
    int lambda_grid_size = 150;
    std::string alpha_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    int datasets = 1;
    std::string out = ".";
    bool quiet = false;
};

int run_simulate(const SimulateOptions& o) {
    ScenarioSpec spec = ScenarioSpec::by_name(o.scenario);
    spec.replicates = o.replicates;
    spec.seed = o.seed;
    spec.n_total = o.n_total;
    spec.validate();
    const std::vector<Method> methods = parse_method_list(o.methods);

    const fs::path out(o.out);
    fs::create_directories(out);
    const ConditionSet conditions = make_conditions(spec.kappa);
    io::write_conditions_csv(out / "conditions.csv", conditions);
    io::write_groups_csv(out / "groups.csv", scenario_grouping(spec.kappa), conditions.labels);

    const int datasets = std::min(o.datasets, spec.replicates);
    for (int r = 0; r < datasets; ++r) {
        const SimulatedData sim = simulate_dataset(spec, r);
        if (r == 0) io::write_beta_curves_csv(out / "truth_beta.csv", sim.truth.beta, conditions.labels, 101);
        std::vector<double> grid(static_cast<std::size_t>(spec.grid_points));
        for (int g = 0; g < spec.grid_points; ++g) grid[g] = static_cast<double>(g) / (spec.grid_points - 1);
        const std::string tag = "rep" + std::to_string(r + 1) + "_";
        for (const auto& [name, part] : {std::pair{"train", &sim.train}, std::pair{"test", &sim.test}}) {
            std::vector<std::string> ids;
            for (Index i = 0; i < part->n(); ++i) ids.push_back(std::string(name) + std::to_string(i + 1));
            io::write_curves_csv(out / (tag + name + "_curves.csv"),
                                 io::curves_from_coefficients(part->coeffs, *part->basis, grid, ids, conditions.labels));
            io::write_responses_csv(out / (tag + name + "_responses.csv"), ids, part->responses);
        }
    }

    if (!methods.empty()) {
        ExperimentOptions opts;
        opts.folds = o.folds;
        opts.lambda_grid_size = o.lambda_grid_size;
        opts.alpha_grid = parse_double_list(o.alpha_grid);
        opts.cv_solver = experiment_cv_solver();
        if (!o.quiet) {
            opts.progress = [](int r, Method m, const ReplicateMetrics& x) {
                std::cerr << "replicate " << r + 1 << " " << to_string(m) << ": mse " << x.mse << "\n";
            };
        }
        const auto summary = run_experiment(spec, methods, opts);
        io::write_comparison_csv(out / "comparison.csv", summary);
        for (const auto& s : summary)
            std::cout << s.method << ": MSE " << s.mse_mean << " (" << s.mse_sd << "), Sens " << s.sens << ", Spec "
                      << s.spec << "\n";
    }
    return 0;
}

int run_evaluate(const std::string& fit_path, const std::string& curves, const std::string& responses,
                 const std::string& out) {
    const io::StoredFit stored = io::read_fit_json(fit_path);
    const io::CurveTable table = io::align_dimensions(io::read_curves_csv(curves), stored.dim_ids);
    FunctionalDataset data;
    data.basis = stored.fit.beta.basis;
    data.coeffs = project_curves(table.grid, table.values, data.basis);
    data.responses = io::read_responses_csv(responses, table.subject_ids);
    const Vector scores = predict_scores(stored.fit, data);
    std::cout << evaluate_fit(stored.fit, data) << "\n";
    if (!out.empty()) {
        std::ostringstream os;
        os << "subject_id,score" << (stored.fit.coding ? ",class" : "") << "\n";
        for (Index i = 0; i < scores.size(); ++i) {
            os << table.subject_ids[i] << ',' << io::format_double(scores(i));
            if (stored.fit.coding) os << ',' << (scores(i) >= stored.fit.coding->threshold ? 1 : 0);
            os << '\n';
        }
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << os.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalized regression and classification for repeated functional data"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "generate scenario data and compare methods");
    simulate->add_option("--scenario", sim.scenario, "s1|s2");
    simulate->add_option("--replicates", sim.replicates, "number of replicates")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--n-total", sim.n_total, "subjects per replicate (80/20 split)")->check(CLI::PositiveNumber);
    simulate->add_option("--methods", sim.methods, "comma separated methods to compare (empty: data only)");
    simulate->add_option("--folds", sim.folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    simulate->add_option("--lambda-grid-size", sim.lambda_grid_size, "lambda grid length")->check(CLI::PositiveNumber);
    simulate->add_option("--alpha-grid", sim.alpha_grid, "comma separated GFUL alpha values");
    simulate->add_option("--datasets", sim.datasets, "replicates whose data files are written")->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", sim.out, "output directory");
    simulate->add_flag("--quiet", sim.quiet, "no per-replicate progress");

    ModelOptions fit_opts;
    auto* fit_cmd = app.add_subcommand("fit", "fit one model");
    add_model_options(fit_cmd, fit_opts, false);

    ModelOptions cv_opts;
    auto* cv_cmd = app.add_subcommand("cv", "cross-validated fit");
    add_model_options(cv_cmd, cv_opts, true);

    std::string eval_fit, eval_curves, eval_responses, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "score a stored fit on new data");
    evaluate->add_option("--fit", eval_fit, "fit JSON")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--curves", eval_curves, "curves CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--responses", eval_responses, "responses CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", eval_out, "optional per-subject predictions CSV");

    std::string export_fit, export_out = "beta_curves.csv";
    int export_grid = 101;
    auto* export_cmd = app.add_subcommand("export", "sample fitted coefficient curves");
    export_cmd->add_option("--fit", export_fit, "fit JSON")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--grid-size", export_grid, "points per dimension")->check(CLI::PositiveNumber);
    export_cmd->add_option("--out", export_out, "output CSV: dim_id,t,beta_value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*fit_cmd) return run_model(fit_opts);
        if (*cv_cmd) return run_model(cv_opts);
        if (*evaluate) return run_evaluate(eval_fit, eval_curves, eval_responses, eval_out);
        if (*export_cmd) {
            const io::StoredFit stored = io::read_fit_json(export_fit);
            io::write_beta_curves_csv(export_out, stored.fit.beta, stored.dim_ids, export_grid);
            return 0;
        }
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RankError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
