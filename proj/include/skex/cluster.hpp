#pragma once

#include "skex/data.hpp"
#include "skex/theory.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

namespace skex {

enum class ClusterAlgorithm { kmeans, agglomerative_ward };

struct ClusterConfig {
    /// Number of clusters; nullopt selects it by validation sweep.
    std::optional<std::size_t> k;
    std::size_t k_max = 6;
    ClusterAlgorithm algorithm = ClusterAlgorithm::agglomerative_ward;
    /// Weight of the normalized oracle output in the clustering metric.
    double output_weight = 0.25;
    /// Per-dimension quantile trimmed from each side of a cluster's box.
    double trim_fraction = 0.05;
    OutputKind output_kind = OutputKind::linear;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ClusterAssignment {
    std::vector<std::size_t> labels;
    /// Sample indices per cluster, ascending. Cluster c is the one whose
    /// smallest sample index is the c-th smallest.
    std::vector<std::vector<std::size_t>> members;

    std::size_t k() const noexcept { return members.size(); }
};

/// Lloyd's k-means with greedy farthest-point seeding from a seeded start.
/// Throws ConfigError when fewer than k distinct vectors exist.
ClusterAssignment kmeans(std::span<const Point> vectors, std::size_t k, std::uint64_t seed);

/// Ward-linkage agglomerative clustering cut at k clusters.
ClusterAssignment agglomerative_ward(std::span<const Point> vectors, std::size_t k);

/// Min-max-normalized features followed by `output_weight` times the
/// min-max-normalized oracle prediction.
std::vector<Point> joint_vectors(const Dataset& dataset, std::span<const double> predictions, double output_weight);

/// Requires config.k to be set.
ClusterAssignment cluster_assign(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config);

/// Rule priority: more samples first, then larger volume, then lower index.
struct ClusterPriority {
    std::size_t count = 0;
    double volume = 0.0;
    std::size_t index = 0;

    /// True when `*this` must be emitted before `other`.
    bool before(const ClusterPriority& other) const noexcept {
        if (count != other.count) {
            return count > other.count;
        }
        if (volume != other.volume) {
            return volume > other.volume;
        }
        return index < other.index;
    }
};

ClusterPriority cluster_priority(std::size_t index, std::span<const std::size_t> members, const Hypercube& cube);

/// Picks k in [1, k_max] minimizing validation MAE against the oracle on a
/// seeded 80/20 split. MAEs within 1e-9 count as ties, which go to the smaller k.
std::size_t select_k(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config);

struct ClusterResult {
    Theory theory;
    std::size_t k = 0;
    ClusterAssignment assignment;
    /// Enclosing (trimmed) box per cluster, indexed by cluster.
    std::vector<Hypercube> cubes;
    /// Cluster index behind each emitted rule, in rule order.
    std::vector<std::size_t> rule_cluster;
    /// Samples inside their own cluster's box, per cluster.
    std::vector<std::vector<std::size_t>> retained;
};

ClusterResult run_clustered(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config);

inline Theory extract_clustered(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config) {
    return run_clustered(dataset, oracle, config).theory;
}

} // namespace skex
