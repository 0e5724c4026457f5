#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "smds/graph_linalg.hpp"
#include "smds/rng.hpp"
#include "smds/types.hpp"

namespace smds {

enum class WeightScheme { unity, sammon, provided };

WeightScheme parse_weight_scheme(const std::string& name);
std::string to_string(WeightScheme scheme);

// Exact number of pairs per cluster.
struct PairCount {
    std::size_t value = 1;
};

// Fraction of the p(p-1)/2 pairs per cluster, rounded to the nearest count.
struct PairFraction {
    double value = 1.0;
};

using EdgeBudget = std::variant<PairCount, PairFraction>;

struct SamplerConfig {
    Eigen::Index p = 25;
    EdgeBudget budget = PairFraction{1.0};
    WeightScheme scheme = WeightScheme::unity;
    std::uint64_t seed = 1;
    // Resample until the selected pairs connect the cluster. Off by default:
    // disconnected clusters are split into their components instead.
    bool require_connected = false;

    void validate(Eigen::Index node_count) const;
};

// Random disjoint clusters of size p. When N mod p >= 2 the remainder forms a
// final smaller cluster; a single leftover node idles for the slot.
ClusterPartition partition_nodes(Eigen::Index node_count, Eigen::Index p, Rng& rng);

// Uniformly random distinct intra-cluster pairs, returned as global ids with
// first < second and sorted. Requests above p(p-1)/2 are clamped with a
// warning.
std::vector<std::pair<NodeId, NodeId>> sample_cluster_edges(std::span<const NodeId> cluster,
                                                            const EdgeBudget& budget, Rng& rng,
                                                            bool require_connected = false);

// Assigns weights by scheme. Pairs with delta <= 0 get weight 0. Nonzero
// weights below eps_w are raised to eps_w with a warning; Sammon weights
// 1/delta are capped at 1.
std::vector<Observation> assign_weights(std::span<const Observation> measured, WeightScheme scheme,
                                        double eps_w = 1e-3);

struct ClusterSizing {
    Eigen::Index p = 2;
    std::size_t q = 1;
};

// Picks (p, q) for a target of f(N) measurements per slot.
// Sparse: p ~ (f/N)^beta, q ~ (f/N)^(beta+1). Dense: p ~ f/N, q = p(p-1)/2.
// Infeasible targets are clamped to the nearest valid sizing with a warning.
ClusterSizing calibrate_p_q(Eigen::Index node_count, double measurements_per_slot,
                            bool sparse_mode, double beta = 2.0);

// Number of unordered pairs among p nodes.
inline std::size_t pair_count(Eigen::Index p) {
    return p < 2 ? 0 : static_cast<std::size_t>(p) * static_cast<std::size_t>(p - 1) / 2;
}

// Maps k in [0, p(p-1)/2) to the k-th pair (a, b), a < b, in row-major order.
std::pair<Eigen::Index, Eigen::Index> decode_pair_index(std::uint64_t k, Eigen::Index p);

// k distinct values from [0, range), sorted (Floyd's algorithm).
std::vector<std::uint64_t> sample_distinct(std::uint64_t range, std::size_t k, Rng& rng);

}  // namespace smds
