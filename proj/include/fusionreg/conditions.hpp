#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fusionreg/common.hpp"

namespace fusionreg {

enum class Metric { Euclidean, GreatCircle };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

/// The p conditions under which the curve is observed, as points in R^s.
struct ConditionSet {
    Matrix coords;  // p x s
    std::vector<std::string> labels;
    Metric metric = Metric::Euclidean;

    Index p() const { return coords.rows(); }
};

/// 1-nearest-neighbor map, 0-based: neighbor[j] != j.
struct NeighborMap {
    std::vector<Index> neighbor;
    /// Conditions whose nearest neighbor was not unique (smallest index kept).
    std::vector<Index> tie_log;

    Index p() const { return static_cast<Index>(neighbor.size()); }
};

/// Surjective assignment of p conditions to K groups, 0-based.
struct ConditionGrouping {
    std::vector<Index> assignment;           // size p, values in [0, K)
    std::vector<std::vector<Index>> index_sets;  // members of each group, ascending

    Index k() const { return static_cast<Index>(index_sets.size()); }
    Index p() const { return static_cast<Index>(assignment.size()); }
    Index group_size(Index g) const { return static_cast<Index>(index_sets[static_cast<std::size_t>(g)].size()); }

    /// Builds index sets from an assignment; throws if some group is empty.
    static ConditionGrouping from_assignment(std::vector<Index> assignment);
    /// All conditions in their own group.
    static ConditionGrouping singletons(Index p);
};

/// Symmetric, zero diagonal. Great-circle distances are taken on the unit
/// sphere after normalizing each point.
Matrix pairwise_distance(const ConditionSet& conditions);

double condition_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                          Metric metric);

NeighborMap nearest_neighbor_map(const ConditionSet& conditions);
NeighborMap nearest_neighbor_map(const Matrix& distances);

/// Lloyd's algorithm with k-means++ seeding, best inertia over 10 restarts.
ConditionGrouping kmeans_groups(const ConditionSet& conditions, Index k, std::uint64_t seed);

/// Average-linkage agglomerative clustering stopped at k clusters.
ConditionGrouping agglomerative_groups(const Matrix& dissimilarity, Index k);

}  // namespace fusionreg
