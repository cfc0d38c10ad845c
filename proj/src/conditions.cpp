#include "fusionreg/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fusionreg/kernels.hpp"

namespace fusionreg {

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::Euclidean;
    if (name == "greatcircle") return Metric::GreatCircle;
    throw ParameterError("unknown metric '" + name + "' (expected euclidean|greatcircle)");
}

std::string to_string(Metric metric) {
    return metric == Metric::Euclidean ? "euclidean" : "greatcircle";
}

ConditionGrouping ConditionGrouping::from_assignment(std::vector<Index> assignment) {
    require(!assignment.empty(), "grouping needs at least one condition");
    const Index k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    ConditionGrouping out;
    out.index_sets.assign(static_cast<std::size_t>(k), {});
    for (std::size_t j = 0; j < assignment.size(); ++j) {
        require(assignment[j] >= 0, "group ids must be non-negative");
        out.index_sets[static_cast<std::size_t>(assignment[j])].push_back(static_cast<Index>(j));
    }
    for (Index g = 0; g < k; ++g) {
        if (out.index_sets[static_cast<std::size_t>(g)].empty())
            throw ParameterError("grouping is not surjective: group " + std::to_string(g + 1) +
                                 " has no conditions");
    }
    out.assignment = std::move(assignment);
    return out;
}

ConditionGrouping ConditionGrouping::singletons(Index p) {
    std::vector<Index> a(static_cast<std::size_t>(p));
    std::iota(a.begin(), a.end(), Index{0});
    return from_assignment(std::move(a));
}

double condition_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                          Metric metric) {
    if (metric == Metric::Euclidean) return (a - b).norm();
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0)
        throw ParameterError("great-circle distance needs non-zero coordinates");
    const Vector ua = a / na;
    const Vector ub = b / nb;
    // Same angle as acos(<ua, ub>) but accurate for nearly (anti)parallel points.
    return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

Matrix pairwise_distance(const ConditionSet& conditions) {
    require(conditions.p() >= 1, "no conditions");
    return kernels::distance_matrix(conditions.coords, conditions.metric);
}

NeighborMap nearest_neighbor_map(const Matrix& distances) {
    const Index p = distances.rows();
    require(p >= 2 && distances.cols() == p, "neighbor map needs a square distance matrix, p >= 2");
    NeighborMap out;
    out.neighbor.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < p; ++i) {
            if (i == j) continue;
            require(std::isfinite(distances(i, j)), "non-finite distance");
            best = std::min(best, distances(i, j));
        }
        const double cut = best + 1e-12 * std::max(best, 1e-300);
        Index chosen = -1;
        Index matches = 0;
        for (Index i = 0; i < p; ++i) {
            if (i == j || distances(i, j) > cut) continue;
            if (chosen < 0) chosen = i;
            ++matches;
        }
        out.neighbor[static_cast<std::size_t>(j)] = chosen;
        if (matches > 1) out.tie_log.push_back(j);
    }
    return out;
}

NeighborMap nearest_neighbor_map(const ConditionSet& conditions) {
    require(conditions.p() >= 2, "neighbor map needs at least two conditions");
    return nearest_neighbor_map(pairwise_distance(conditions));
}

namespace {

std::vector<Index> relabel_first_occurrence(const std::vector<Index>& labels) {
    std::vector<Index> map(labels.size(), -1);
    std::vector<Index> out(labels.size());
    Index next = 0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        auto& slot = map[static_cast<std::size_t>(labels[j])];
        if (slot < 0) slot = next++;
        out[j] = slot;
    }
    return out;
}

struct KmeansRun {
    std::vector<Index> labels;
    double inertia = std::numeric_limits<double>::infinity();
    bool empty_cluster = false;
};

KmeansRun lloyd_once(const Matrix& x, Index k, std::mt19937_64& rng) {
    const Index p = x.rows();
    Matrix centers(k, x.cols());

    // k-means++ seeding
    std::uniform_int_distribution<Index> first(0, p - 1);
    centers.row(0) = x.row(first(rng));
    Vector d2(p);
    for (Index j = 0; j < p; ++j) d2(j) = (x.row(j) - centers.row(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            pick = p - 1;
            for (Index j = 0; j < p; ++j) {
                target -= d2(j);
                if (target < 0.0) {
                    pick = j;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centers.row(c) = x.row(pick);
        for (Index j = 0; j < p; ++j)
            d2(j) = std::min(d2(j), (x.row(j) - centers.row(c)).squaredNorm());
    }

    KmeansRun run;
    run.labels.assign(static_cast<std::size_t>(p), -1);
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        for (Index j = 0; j < p; ++j) {
            Index best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (Index c = 0; c < k; ++c) {
                const double d = (x.row(j) - centers.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (run.labels[static_cast<std::size_t>(j)] != best) {
                run.labels[static_cast<std::size_t>(j)] = best;
                changed = true;
            }
        }
        Matrix sums = Matrix::Zero(k, x.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index j = 0; j < p; ++j) {
            sums.row(run.labels[static_cast<std::size_t>(j)]) += x.row(j);
            ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(j)])];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0)
                centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
        if (!changed) break;
    }
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    run.inertia = 0.0;
    for (Index j = 0; j < p; ++j) {
        const Index c = run.labels[static_cast<std::size_t>(j)];
        ++counts[static_cast<std::size_t>(c)];
        run.inertia += (x.row(j) - centers.row(c)).squaredNorm();
    }
    run.empty_cluster = std::any_of(counts.begin(), counts.end(), [](Index c) { return c == 0; });
    return run;
}

}  // namespace

ConditionGrouping kmeans_groups(const ConditionSet& conditions, Index k, std::uint64_t seed) {
    const Index p = conditions.p();
    require(k >= 1 && k <= p, "k-means needs 1 <= K <= p");
    std::mt19937_64 rng(seed);
    KmeansRun best;
    constexpr int restarts = 10;
    for (int r = 0; r < restarts; ++r) {
        KmeansRun run = lloyd_once(conditions.coords, k, rng);
        if (run.empty_cluster) continue;
        if (run.inertia < best.inertia) best = std::move(run);
    }
    if (best.labels.empty())
        throw NumericalError("k-means produced an empty cluster in every restart");
    return ConditionGrouping::from_assignment(relabel_first_occurrence(best.labels));
}

ConditionGrouping agglomerative_groups(const Matrix& dissimilarity, Index k) {
    const Index p = dissimilarity.rows();
    require(dissimilarity.cols() == p && p >= 1, "dissimilarity must be square");
    require(k >= 1 && k <= p, "agglomerative clustering needs 1 <= K <= p");
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) {
            const double a = dissimilarity(i, j);
            require(std::isfinite(a) && a >= 0.0, "dissimilarity must be finite and non-negative");
            require(std::abs(a - dissimilarity(j, i)) <= 1e-12 * std::max(1.0, std::abs(a)),
                    "dissimilarity matrix must be symmetric");
        }
    }

    // clusters ordered by their smallest member, which is the tie-break order
    std::vector<std::vector<Index>> clusters(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) clusters[static_cast<std::size_t>(j)] = {j};
    Matrix link = dissimilarity;

    while (static_cast<Index>(clusters.size()) > k) {
        const Index c = static_cast<Index>(clusters.size());
        Index bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < c; ++i) {
            for (Index j = i + 1; j < c; ++j) {
                if (link(i, j) < best) {
                    best = link(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const double ni = static_cast<double>(clusters[static_cast<std::size_t>(bi)].size());
        const double nj = static_cast<double>(clusters[static_cast<std::size_t>(bj)].size());
        for (Index m = 0; m < c; ++m) {
            if (m == bi || m == bj) continue;
            const double merged = (ni * link(bi, m) + nj * link(bj, m)) / (ni + nj);
            link(bi, m) = merged;
            link(m, bi) = merged;
        }
        auto& into = clusters[static_cast<std::size_t>(bi)];
        const auto& from = clusters[static_cast<std::size_t>(bj)];
        into.insert(into.end(), from.begin(), from.end());
        std::sort(into.begin(), into.end());
        clusters.erase(clusters.begin() + bj);

        Matrix reduced(c - 1, c - 1);
        for (Index i = 0, ri = 0; i < c; ++i) {
            if (i == bj) continue;
            for (Index j = 0, rj = 0; j < c; ++j) {
                if (j == bj) continue;
                reduced(ri, rj++) = link(i, j);
            }
            ++ri;
        }
        link = std::move(reduced);
    }

    std::vector<Index> labels(static_cast<std::size_t>(p));
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (Index j : clusters[c]) labels[static_cast<std::size_t>(j)] = static_cast<Index>(c);
    return ConditionGrouping::from_assignment(relabel_first_occurrence(labels));
}

}  // namespace fusionreg
