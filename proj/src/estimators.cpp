#include "fusionreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fusionreg/kernels.hpp"

namespace fusionreg {

Method parse_method(const std::string& name) {
    if (name == "fu") return Method::FU;
    if (name == "gful") return Method::GFUL;
    if (name == "gl1") return Method::GL1;
    if (name == "gl2") return Method::GL2;
    if (name == "hg") return Method::HG;
    if (name == "mfpcr") return Method::MFPCR;
    throw ParameterError("unknown method '" + name + "' (expected fu|gful|gl1|gl2|hg|mfpcr)");
}

std::string to_string(Method method) {
    switch (method) {
        case Method::FU: return "fu";
        case Method::GFUL: return "gful";
        case Method::GL1: return "gl1";
        case Method::GL2: return "gl2";
        case Method::HG: return "hg";
        case Method::MFPCR: return "mfpcr";
    }
    return "?";
}

Task parse_task(const std::string& name) {
    if (name == "regress") return Task::Regress;
    if (name == "classify") return Task::Classify;
    throw ParameterError("unknown task '" + name + "' (expected regress|classify)");
}

std::string to_string(Task task) { return task == Task::Regress ? "regress" : "classify"; }

bool is_penalized(Method method) { return method != Method::HG && method != Method::MFPCR; }

EqualityStructure EqualityStructure::none(Index p) {
    EqualityStructure eq;
    eq.class_of.resize(static_cast<std::size_t>(p));
    std::iota(eq.class_of.begin(), eq.class_of.end(), Index{0});
    return eq;
}

namespace {

class UnionFind {
public:
    explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), Index{0});
    }
    Index find(Index a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    // keeps the smaller root so representatives are smallest members
    void unite(Index a, Index b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<Index> parent_;
};

constexpr double kEqualityBackstop = 1e-8;

// Closes the relation, snaps each class of B to a shared row and fills the
// pair list. Classes touching `zero` are snapped to the zero function.
EqualityStructure finish_equality(UnionFind& uf, const std::vector<bool>& zero, Matrix& b,
                                  const BasisSystem& basis, bool backstop,
                                  std::vector<std::string> derivation,
                                  const ConditionGrouping* grouping) {
    const Index p = b.rows();
    Index first_zero = -1;
    for (Index j = 0; j < p; ++j) {
        if (!zero[j]) continue;
        if (first_zero < 0) first_zero = j;
        else uf.unite(first_zero, j);
    }
    if (backstop) {
        const Matrix scaled = b * basis.gram_sqrt();
        for (Index i = 0; i < p; ++i) {
            for (Index j = i + 1; j < p; ++j) {
                if (uf.find(i) == uf.find(j)) continue;
                if ((scaled.row(i) - scaled.row(j)).norm() <= kEqualityBackstop) {
                    uf.unite(i, j);
                    std::ostringstream os;
                    os << "L2 distance below backstop: (" << i << ", " << j << ")";
                    derivation.push_back(os.str());
                }
            }
        }
    }

    EqualityStructure eq;
    eq.class_of.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) eq.class_of[j] = uf.find(j);
    const Index zero_class = first_zero >= 0 ? uf.find(first_zero) : -1;

    for (Index rep = 0; rep < p; ++rep) {
        std::vector<Index> members;
        for (Index j = 0; j < p; ++j)
            if (eq.class_of[j] == rep) members.push_back(j);
        if (members.empty()) continue;
        if (rep == zero_class) {
            for (Index j : members) b.row(j).setZero();
        } else if (members.size() > 1) {
            Vector mean = Vector::Zero(b.cols());
            for (Index j : members) mean += b.row(j).transpose();
            mean /= static_cast<double>(members.size());
            for (Index j : members) b.row(j) = mean.transpose();
        }
    }
    for (Index i = 0; i < p; ++i)
        for (Index j = i + 1; j < p; ++j)
            if (eq.class_of[i] == eq.class_of[j]) eq.fused_pairs.emplace_back(i, j);

    if (grouping != nullptr) {
        for (Index k = 0; k < grouping->k(); ++k) {
            const auto& members = grouping->index_sets[k];
            if (members.size() < 2) continue;
            const bool all = std::all_of(members.begin(), members.end(),
                                         [&](Index j) { return eq.class_of[j] == eq.class_of[members.front()]; });
            if (all) eq.fused_groups.push_back(k);
        }
    }
    eq.derivation = std::move(derivation);
    return eq;
}

// A penalized estimator reduced to a layout, plus what is needed to read
// its equality structure back off gamma.
struct PenalizedSetup {
    Method method = Method::GL1;  // effective method: GFUL at alpha = 1 becomes GL2
    PenaltyLayout layout;
    std::optional<FuTransform> fu;
    std::optional<GfulTransform> gful;
    std::optional<ConditionGrouping> grouping;
};

PenalizedSetup penalized_setup(Method method, const ConditionSet* conditions,
                               const ConditionGrouping* grouping, double alpha, Index p) {
    PenalizedSetup s;
    s.method = method;
    switch (method) {
        case Method::FU: {
            require(conditions != nullptr && conditions->p() == p, "FU needs one condition per dimension");
            s.fu = build_fu_transform(nearest_neighbor_map(*conditions));
            s.layout = fu_layout(*s.fu);
            break;
        }
        case Method::GFUL: {
            require(grouping != nullptr && grouping->p() == p, "GFUL needs a grouping of all dimensions");
            require(alpha > 0.0 && alpha <= 1.0, "GFUL alpha must lie in (0, 1]");
            s.grouping = *grouping;
            if (alpha == 1.0) {
                s.method = Method::GL2;
                s.layout = group_lasso_layout(*grouping);
            } else {
                s.gful = build_gful_transform(*grouping, alpha);
                s.layout = gful_layout(*s.gful);
            }
            break;
        }
        case Method::GL1:
            s.grouping = ConditionGrouping::singletons(p);
            s.layout = group_lasso_layout(*s.grouping);
            break;
        case Method::GL2:
            require(grouping != nullptr && grouping->p() == p, "GL2 needs a grouping of all dimensions");
            s.grouping = *grouping;
            s.layout = group_lasso_layout(*grouping);
            break;
        default:
            throw ParameterError("not a penalized method: " + to_string(method));
    }
    return s;
}

EqualityStructure penalized_equality(const PenalizedSetup& s, const TransformedDesign& td,
                                     const Vector& gamma, Matrix& b) {
    const Index p = b.rows();
    const std::vector<bool> zero_rows = td.zero_row_groups(gamma);
    UnionFind uf(p);
    std::vector<bool> zero(static_cast<std::size_t>(p), false);
    std::vector<std::string> derivation;

    if (s.method == Method::FU) {
        const FuTransform& fu = *s.fu;
        for (Index r = 0; r < fu.rank; ++r) {
            if (!zero_rows[r]) continue;
            const auto [j, v] = fu.row_pairs[r];
            uf.unite(j, v);
            std::ostringstream os;
            os << "fusion row " << r << " zero: (" << j << ", " << v << ")";
            derivation.push_back(os.str());
        }
        if (std::all_of(zero_rows.begin(), zero_rows.end(), [](bool z) { return z; })) {
            std::fill(zero.begin(), zero.end(), true);
            derivation.emplace_back("all groups zero: beta = 0");
        }
    } else if (s.method == Method::GFUL) {
        const GfulTransform& gt = *s.gful;
        const Index k = gt.k();
        for (Index g = 0; g < k; ++g) {
            const auto& members = gt.grouping.index_sets[g];
            const bool fusion_zero = zero_rows[g];  // trivially true for singletons
            if (fusion_zero && members.size() > 1) {
                for (Index j : members) uf.unite(members.front(), j);
                std::ostringstream os;
                os << "group " << g << " fusion block zero";
                derivation.push_back(os.str());
            }
            if (fusion_zero && zero_rows[k + g]) {
                for (Index j : members) zero[j] = true;
                std::ostringstream os;
                os << "group " << g << " fusion and mean blocks zero: beta = 0";
                derivation.push_back(os.str());
            }
        }
    } else {
        for (std::size_t g = 0; g < s.layout.row_groups.size(); ++g) {
            if (!zero_rows[g]) continue;
            for (Index j : s.layout.row_groups[g].rows) zero[j] = true;
            std::ostringstream os;
            os << "group " << g << " zero: beta = 0";
            derivation.push_back(os.str());
        }
    }
    const ConditionGrouping* grouping = s.grouping ? &*s.grouping : nullptr;
    return finish_equality(uf, zero, b, *td.basis, true, std::move(derivation), grouping);
}

// Descending grid from lambda_max ending exactly at `lambda`.
std::vector<double> warm_path_to(double lambda_max, double lambda, double ratio) {
    std::vector<double> out;
    for (double lam = lambda_max; lam > lambda && out.size() < 10000; lam *= ratio) {
        out.push_back(lam);
        if (lam < 1e-300) break;
    }
    out.push_back(lambda);
    return out;
}

FitResult fit_penalized(const FunctionalDataset& data, const PenalizedSetup& setup, Method tag,
                        double lambda, double alpha, const SolverOptions& options) {
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and non-negative");
    const FunctionalDataset ctr = center(data);
    const TransformedDesign td = transformed_design(ctr, setup.layout, true);

    SolverOptions opts = options;
    if (opts.lipschitz <= 0.0) opts.lipschitz = lipschitz_constant(td.problem.design);
    const auto lambdas = warm_path_to(lambda_max(td.problem), lambda, 0.96);
    std::vector<SolverReport> reports = path(td.problem, lambdas, opts);

    FitResult out;
    out.method = tag;
    out.lambda = lambda;
    out.alpha = alpha;
    out.solver = std::move(reports.back());
    out.solver.gamma = td.expand(out.solver.gamma);
    out.gamma = out.solver.gamma;
    Matrix b = td.back_map(out.gamma);
    out.equality = penalized_equality(setup, td, out.gamma, b);
    out.beta.basis = ctr.basis;
    out.beta.coeffs = std::move(b);
    out.beta.intercept = ctr.response_mean - l2_inner(ctr.coeff_mean, out.beta.coeffs, *ctr.basis);
    out.grouping = setup.grouping;
    return out;
}

Matrix group_mean_matrix(const ConditionGrouping& grouping) {
    Matrix mbar = Matrix::Zero(grouping.k(), grouping.p());
    for (Index g = 0; g < grouping.k(); ++g)
        for (Index j : grouping.index_sets[g])
            mbar(g, j) = 1.0 / static_cast<double>(grouping.group_size(g));
    return mbar;
}

// Principal components of the group-mean features in F-geometry.
struct PcrBasis {
    Matrix v;      // loadings, columns
    Vector sigma;
    Vector uty;    // u_l^T y
    Index rank = 0;
};

PcrBasis pcr_decompose(const Matrix& features, const Vector& y) {
    Eigen::BDCSVD<Matrix> svd(features, Eigen::ComputeThinU | Eigen::ComputeThinV);
    PcrBasis out;
    out.sigma = svd.singularValues();
    const double top = out.sigma.size() > 0 ? out.sigma(0) : 0.0;
    out.rank = 0;
    while (out.rank < out.sigma.size() && out.sigma(out.rank) > 1e-10 * top) ++out.rank;
    out.v = svd.matrixV().leftCols(out.rank);
    out.uty = svd.matrixU().leftCols(out.rank).transpose() * y;
    out.sigma.conservativeResize(out.rank);
    return out;
}

// theta in feature space for the leading c components
Vector pcr_theta(const PcrBasis& pcr, Index c) {
    c = std::min(c, pcr.rank);
    Vector theta = Vector::Zero(pcr.v.rows());
    for (Index l = 0; l < c; ++l) theta += pcr.v.col(l) * (pcr.uty(l) / pcr.sigma(l));
    return theta;
}

FitResult fit_pcr(const FunctionalDataset& data, const ConditionGrouping& grouping, Index components,
                  Method tag) {
    data.validate();
    require(grouping.p() == data.p(), "grouping does not cover every dimension");
    const FunctionalDataset ctr = center(data);
    const Index n = ctr.n();
    const Index k = grouping.k();
    const Index m = ctr.m();
    require(components >= 1, "number of components must be at least 1");
    require(components <= std::min(n - 1, k * m),
            "number of components exceeds min(n - 1, K*M)");

    const BasisSystem& basis = *ctr.basis;
    const Matrix features = kernels::assemble_design(ctr.coeffs, group_mean_matrix(grouping), basis.gram_sqrt());
    const PcrBasis pcr = pcr_decompose(features, ctr.responses);
    const Vector theta = pcr_theta(pcr, components);

    Matrix b(grouping.p(), m);
    for (Index g = 0; g < k; ++g) {
        const Vector gamma_k = basis.gram_sqrt_inv() * theta.segment(g * m, m);
        for (Index j : grouping.index_sets[g])
            b.row(j) = gamma_k.transpose() / static_cast<double>(grouping.group_size(g));
    }

    FitResult out;
    out.method = tag;
    out.components = std::min(components, pcr.rank);
    out.gamma = theta;
    if (tag == Method::HG) {
        UnionFind uf(grouping.p());
        std::vector<std::string> derivation;
        for (Index g = 0; g < k; ++g) {
            const auto& members = grouping.index_sets[g];
            for (Index j : members) uf.unite(members.front(), j);
            if (members.size() > 1) derivation.push_back("group " + std::to_string(g) + " shares one curve");
        }
        std::vector<bool> zero(static_cast<std::size_t>(grouping.p()), false);
        out.equality = finish_equality(uf, zero, b, basis, false, std::move(derivation), &grouping);
        out.grouping = grouping;
    } else {
        out.equality = EqualityStructure::none(grouping.p());
    }
    out.beta.basis = ctr.basis;
    out.beta.coeffs = std::move(b);
    out.beta.intercept = ctr.response_mean - l2_inner(ctr.coeff_mean, out.beta.coeffs, basis);
    out.solver.converged = true;
    return out;
}

const ConditionGrouping& config_grouping(const MethodConfig& config) {
    if (!config.grouping) throw ParameterError(to_string(config.method) + " needs a condition grouping");
    return *config.grouping;
}

ConditionGrouping pcr_grouping(const MethodConfig& config, Index p) {
    return config.method == Method::HG ? config_grouping(config) : ConditionGrouping::singletons(p);
}

PenalizedSetup setup_for(const MethodConfig& config, double alpha, Index p) {
    const ConditionGrouping* grouping = config.grouping ? &*config.grouping : nullptr;
    return penalized_setup(config.method, &config.conditions, grouping, alpha, p);
}

// Re-codes labels for classification; leaves regression data alone.
FunctionalDataset task_view(const FunctionalDataset& data, Task task,
                            std::optional<ClassificationCoding>* coding = nullptr) {
    if (task == Task::Regress) return data;
    FunctionalDataset out = data;
    auto [c, y] = recode_binary(data.responses);
    out.responses = std::move(y);
    if (coding != nullptr) *coding = c;
    return out;
}

double fold_score(Task task, const Vector& train_scores, const Vector& train_labels,
                  const Vector& val_scores, const Vector& val_targets) {
    if (task == Task::Regress) return (val_scores - val_targets).squaredNorm();
    const double thr = class_threshold(train_scores, train_labels);
    double errors = 0.0;
    for (Index i = 0; i < val_scores.size(); ++i) {
        const int predicted = val_scores(i) >= thr ? 1 : 0;
        if (predicted != static_cast<int>(val_targets(i))) errors += 1.0;
    }
    return errors;
}

struct FoldData {
    FunctionalDataset train;  // raw rows, responses already task-coded
    Vector train_labels;      // original labels (classification threshold)
    FunctionalDataset val;    // raw rows, original responses
};

std::vector<FoldData> make_folds(const FunctionalDataset& data, Task task, int folds, std::uint64_t seed) {
    const std::vector<int> assignment = fold_assignment(data.n(), folds, seed);
    std::vector<FoldData> out;
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> tr, va;
        for (Index i = 0; i < data.n(); ++i) (assignment[i] == f ? va : tr).push_back(i);
        if (va.empty()) throw ParameterError("cross-validation produced an empty fold");
        FoldData fd;
        FunctionalDataset train_raw = data.subset(tr);
        fd.train_labels = train_raw.responses;
        fd.train = task_view(train_raw, task);
        fd.val = data.subset(va);
        out.push_back(std::move(fd));
    }
    return out;
}

Vector scores_for(const FunctionalDataset& ctr, const FunctionalDataset& raw, const Matrix& b) {
    const Vector inner = kernels::inner_products(raw.coeffs, b, ctr.basis->gram());
    const double offset = ctr.response_mean - l2_inner(ctr.coeff_mean, b, *ctr.basis);
    return inner.array() + offset;
}

// Picks the minimum score; exact ties resolved by the entry order of
// `preferred`, which lists the most parsimonious candidates first.
std::size_t pick_best(const std::vector<CvEntry>& table, const std::vector<std::size_t>& preferred) {
    std::size_t best = preferred.front();
    for (std::size_t idx : preferred) {
        const double s = table[idx].score;
        const double b = table[best].score;
        if (s < b - 1e-12 * std::max(1.0, std::abs(b))) best = idx;
    }
    return best;
}

}  // namespace

std::pair<ClassificationCoding, Vector> recode_binary(const Vector& labels) {
    const Index n = labels.size();
    Index n1 = 0;
    for (Index i = 0; i < n; ++i) {
        require(labels(i) == 0.0 || labels(i) == 1.0, "class labels must be 0 or 1");
        if (labels(i) == 1.0) ++n1;
    }
    const Index n0 = n - n1;
    require(n1 > 0 && n0 > 0, "classification needs both classes present");
    ClassificationCoding coding;
    coding.positive_code = static_cast<double>(n) / static_cast<double>(n1);
    coding.negative_code = -static_cast<double>(n) / static_cast<double>(n0);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = labels(i) == 1.0 ? coding.positive_code : coding.negative_code;
    return {coding, y};
}

double class_threshold(const Vector& scores, const Vector& labels) {
    require(scores.size() == labels.size(), "score and label counts differ");
    double s1 = 0.0, s0 = 0.0;
    Index n1 = 0, n0 = 0;
    for (Index i = 0; i < scores.size(); ++i) {
        if (labels(i) == 1.0) {
            s1 += scores(i);
            ++n1;
        } else {
            s0 += scores(i);
            ++n0;
        }
    }
    require(n1 > 0 && n0 > 0, "classification needs both classes present");
    return 0.5 * (s1 / static_cast<double>(n1) + s0 / static_cast<double>(n0));
}

FunctionalDataset center(const FunctionalDataset& data) {
    data.validate();
    if (data.centered) return data;
    require(data.n() >= 2, "centering needs at least two subjects");
    FunctionalDataset out = data;
    out.coeff_mean = Matrix::Zero(data.p(), data.m());
    for (const auto& a : data.coeffs) out.coeff_mean += a;
    out.coeff_mean /= static_cast<double>(data.n());
    for (auto& a : out.coeffs) a -= out.coeff_mean;
    out.response_mean = data.responses.mean();
    out.responses.array() -= out.response_mean;
    out.centered = true;
    return out;
}

FitResult fit_fu(const FunctionalDataset& data, const ConditionSet& conditions, double lambda,
                 const SolverOptions& options) {
    data.validate();
    const PenalizedSetup s = penalized_setup(Method::FU, &conditions, nullptr, 0.0, data.p());
    FitResult out = fit_penalized(data, s, Method::FU, lambda, 0.0, options);
    return out;
}

FitResult fit_gful(const FunctionalDataset& data, const ConditionGrouping& grouping, double lambda,
                   double alpha, const SolverOptions& options) {
    data.validate();
    require(alpha > 0.0 && alpha <= 1.0, "GFUL alpha must lie in (0, 1]; alpha = 0 is not supported");
    const PenalizedSetup s = penalized_setup(Method::GFUL, nullptr, &grouping, alpha, data.p());
    return fit_penalized(data, s, Method::GFUL, lambda, alpha, options);
}

FitResult fit_gl(const FunctionalDataset& data, const ConditionGrouping& grouping, double lambda,
                 const SolverOptions& options) {
    data.validate();
    const bool singletons = grouping.k() == grouping.p();
    const Method tag = singletons ? Method::GL1 : Method::GL2;
    const PenalizedSetup s = penalized_setup(Method::GL2, nullptr, &grouping, 0.0, data.p());
    return fit_penalized(data, s, tag, lambda, 0.0, options);
}

FitResult fit_hg(const FunctionalDataset& data, const ConditionGrouping& grouping, Index components) {
    return fit_pcr(data, grouping, components, Method::HG);
}

FitResult fit_mfpcr(const FunctionalDataset& data, Index components) {
    data.validate();
    return fit_pcr(data, ConditionGrouping::singletons(data.p()), components, Method::MFPCR);
}

Vector predict_scores(const FitResult& fit, const FunctionalDataset& data) {
    data.validate();
    require(fit.beta.basis && data.basis->same_as(*fit.beta.basis), "dataset basis differs from the fit's basis");
    require(data.p() == fit.beta.coeffs.rows(), "dataset p differs from the fit");
    const Vector inner = kernels::inner_products(data.coeffs, fit.beta.coeffs, data.basis->gram());
    return inner.array() + fit.beta.intercept;
}

std::vector<int> predict_classes(const FitResult& fit, const FunctionalDataset& data) {
    require(fit.coding.has_value(), "fit was not trained for classification");
    const Vector scores = predict_scores(fit, data);
    std::vector<int> out(static_cast<std::size_t>(scores.size()));
    for (Index i = 0; i < scores.size(); ++i) out[i] = scores(i) >= fit.coding->threshold ? 1 : 0;
    return out;
}

FitResult fit(const FunctionalDataset& data, const MethodConfig& config, const Hyperparameters& hyper) {
    data.validate();
    std::optional<ClassificationCoding> coding;
    const FunctionalDataset work = task_view(data, config.task, &coding);

    FitResult out;
    switch (config.method) {
        case Method::FU: out = fit_fu(work, config.conditions, hyper.lambda, config.solver); break;
        case Method::GFUL:
            out = fit_gful(work, config_grouping(config), hyper.lambda, hyper.alpha, config.solver);
            break;
        case Method::GL1:
            out = fit_gl(work, ConditionGrouping::singletons(data.p()), hyper.lambda, config.solver);
            break;
        case Method::GL2: {
            const PenalizedSetup s = setup_for(config, 0.0, data.p());
            out = fit_penalized(work, s, Method::GL2, hyper.lambda, 0.0, config.solver);
            break;
        }
        case Method::HG: out = fit_hg(work, config_grouping(config), hyper.components); break;
        case Method::MFPCR: out = fit_mfpcr(work, hyper.components); break;
    }
    out.task = config.task;
    if (config.task == Task::Classify) {
        coding->threshold = class_threshold(predict_scores(out, work), data.responses);
        out.coding = coding;
    }
    return out;
}

double method_lambda_max(const FunctionalDataset& data, const MethodConfig& config, double alpha) {
    require(is_penalized(config.method), "lambda_max is defined for penalized methods only");
    const FunctionalDataset ctr = center(task_view(data, config.task));
    const PenalizedSetup s = setup_for(config, alpha, data.p());
    return lambda_max(transformed_design(ctr, s.layout).problem);
}

std::vector<Index> component_grid(const MethodConfig& config, Index p, Index m, Index n_train) {
    const Index k = config.method == Method::HG ? config_grouping(config).k() : p;
    const Index top = std::max<Index>(1, k * (m - 1));
    const Index feasible = std::max<Index>(1, std::min(n_train - 1, k * m));
    const int count = std::max(1, config.component_grid_size);
    std::vector<Index> grid;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const Index c = static_cast<Index>(std::lround(1.0 + t * static_cast<double>(top - 1)));
        grid.push_back(std::min(c, feasible));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
    require(folds >= 2, "cross-validation needs at least two folds");
    require(n >= folds, "fewer subjects than folds");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the order is portable across
    // standard library implementations.
    for (Index i = n - 1; i > 0; --i) {
        const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Index pos = 0; pos < n; ++pos) out[perm[pos]] = static_cast<int>(pos % folds);
    return out;
}

CvResult cross_validate(const FunctionalDataset& data, const MethodConfig& config, int folds,
                        std::uint64_t seed) {
    data.validate();
    const std::vector<FoldData> fold_data = make_folds(data, config.task, folds, seed);
    const double n_total = static_cast<double>(data.n());
    CvResult result;

    if (is_penalized(config.method)) {
        std::vector<double> alphas{0.0};
        if (config.method == Method::GFUL) {
            alphas = config.alpha_grid;
            require(!alphas.empty(), "alpha grid is empty");
            for (double a : alphas) require(a > 0.0 && a <= 1.0, "alpha grid values must lie in (0, 1]");
        }
        require(config.lambda_grid_size >= 1, "lambda grid is empty");
        for (double alpha : alphas) {
            const PenalizedSetup setup = setup_for(config, alpha, data.p());
            const double lmax = method_lambda_max(data, config, alpha);
            const std::vector<double> grid = lambda_grid(lmax, config.lambda_grid_size, config.lambda_ratio);
            std::vector<double> totals(grid.size(), 0.0);
            for (const FoldData& fd : fold_data) {
                const FunctionalDataset ctr = center(fd.train);
                const TransformedDesign td = transformed_design(ctr, setup.layout, true);
                const std::vector<SolverReport> reports = path(td.problem, grid, config.cv_solver);
                for (std::size_t l = 0; l < grid.size(); ++l) {
                    const Matrix b = td.back_map(reports[l].gamma);
                    const Vector val = scores_for(ctr, fd.val, b);
                    Vector train;
                    if (config.task == Task::Classify) train = scores_for(ctr, fd.train, b);
                    totals[l] += fold_score(config.task, train, fd.train_labels, val, fd.val.responses);
                }
            }
            for (std::size_t l = 0; l < grid.size(); ++l)
                result.table.push_back({alpha, grid[l], 0, totals[l] / n_total});
        }
        // parsimony first: larger lambda, then larger alpha
        std::vector<std::size_t> order(result.table.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const CvEntry& ea = result.table[a];
            const CvEntry& eb = result.table[b];
            if (ea.lambda != eb.lambda) return ea.lambda > eb.lambda;
            return ea.alpha > eb.alpha;
        });
        const CvEntry& best = result.table[pick_best(result.table, order)];
        result.best.lambda = best.lambda;
        result.best.alpha = config.method == Method::GFUL ? best.alpha : 0.0;
        result.best_score = best.score;
        return result;
    }

    Index min_train = data.n();
    for (const FoldData& fd : fold_data) min_train = std::min(min_train, fd.train.n());
    const std::vector<Index> grid = component_grid(config, data.p(), data.m(), min_train);
    const ConditionGrouping grouping = pcr_grouping(config, data.p());
    const Matrix mbar = group_mean_matrix(grouping);
    std::vector<double> totals(grid.size(), 0.0);
    for (const FoldData& fd : fold_data) {
        const FunctionalDataset ctr = center(fd.train);
        const Matrix& root = ctr.basis->gram_sqrt();
        const Matrix features = kernels::assemble_design(ctr.coeffs, mbar, root);
        const PcrBasis pcr = pcr_decompose(features, ctr.responses);
        std::vector<Matrix> val_centered = fd.val.coeffs;
        for (auto& a : val_centered) a -= ctr.coeff_mean;
        const Matrix val_features = kernels::assemble_design(val_centered, mbar, root);
        const Matrix val_proj = val_features * pcr.v;  // n_val x rank
        Matrix train_proj;
        if (config.task == Task::Classify) train_proj = features * pcr.v;
        for (std::size_t c = 0; c < grid.size(); ++c) {
            const Index used = std::min(grid[c], pcr.rank);
            Vector coef = Vector::Zero(pcr.rank);
            for (Index l = 0; l < used; ++l) coef(l) = pcr.uty(l) / pcr.sigma(l);
            const Vector val = (val_proj * coef).array() + ctr.response_mean;
            Vector train;
            if (config.task == Task::Classify) train = (train_proj * coef).array() + ctr.response_mean;
            totals[c] += fold_score(config.task, train, fd.train_labels, val, fd.val.responses);
        }
    }
    for (std::size_t c = 0; c < grid.size(); ++c)
        result.table.push_back({0.0, 0.0, grid[c], totals[c] / n_total});
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const CvEntry& best = result.table[pick_best(result.table, order)];
    result.best.components = best.components;
    result.best_score = best.score;
    return result;
}

FitResult fit_cv(const FunctionalDataset& data, const MethodConfig& config, int folds, std::uint64_t seed) {
    CvResult cv = cross_validate(data, config, folds, seed);
    FitResult out = fit(data, config, cv.best);
    out.cv_table = std::move(cv.table);
    return out;
}

}  // namespace fusionreg
