#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smds/rng.hpp"
#include "smds/sampling.hpp"
#include "smds/types.hpp"

namespace smds {

struct MobilityConfig {
    double alpha = 0.9;
    double sigma_v = 0.01;

    void validate() const;
};

// Per-node ownership flags for in-flight clusters.
class LockTable {
public:
    static constexpr NodeId none = -1;

    LockTable() = default;
    explicit LockTable(Eigen::Index node_count);

    // False, and counted as a double lock, when the node is already held.
    bool acquire(NodeId node, NodeId owner);
    // Releases only a lock held by `owner`.
    void release(NodeId node, NodeId owner);

    bool available(NodeId node) const { return holder_[static_cast<std::size_t>(node)] == none; }
    NodeId holder(NodeId node) const { return holder_[static_cast<std::size_t>(node)]; }
    std::size_t held() const;
    std::size_t double_locks() const { return double_locks_; }
    std::size_t bad_releases() const { return bad_releases_; }

private:
    std::vector<NodeId> holder_;
    std::size_t double_locks_ = 0;
    std::size_t bad_releases_ = 0;
};

struct MobileNetworkState {
    Embedding truth;       // N x 2
    Embedding velocities;  // N x 2
    Embedding estimates;   // N x 2
    std::vector<NodeId> anchors;  // ascending
    double side = 0.0;
    double comm_radius = 0.0;
    LockTable locks;
    std::int64_t round = 0;

    Eigen::Index size() const { return truth.rows(); }
};

// Uniform deployment over a sqrt(N) x sqrt(N) square with radius sqrt(N)/2,
// velocities N(0, sigma_v^2 I) and estimates truth + N(0, (N/100) I).
MobileNetworkState deploy_network(Eigen::Index node_count, Eigen::Index anchor_count,
                                  const MobilityConfig& mobility, Rng& rng);

// v <- alpha v + sqrt(1 - alpha^2) n, x <- x + v, reflecting at the edges.
void step_mobility(MobileNetworkState& state, const MobilityConfig& cfg, Rng& rng);

// All in-range pairs with delta = d + N(0, sigma^2); delta <= 0 gets weight 0.
ObservationBatch measure_distances(const MobileNetworkState& state, double noise_sigma, Rng& rng);

struct ProtocolConfig {
    // Mean cluster size; each available node declares with probability 1/p.
    double target_cluster_size = 11.0;
    int max_members = 10;
    int min_members = 5;
    double timeout_probability = 0.0;
    double noise_sigma = 0.0;
    WeightScheme scheme = WeightScheme::unity;
    StepConfig step{0.5, 1e-8, 1e-3};
    SolverOptions solver;

    void validate() const;
};

enum class ClusterOutcome { completed, aborted, timed_out, lost_contention };

struct ClusterEvent {
    NodeId head = 0;
    std::vector<NodeId> members;
    ClusterOutcome outcome = ClusterOutcome::completed;
    // Messages charged to this cluster: 1 solicitation + 1 per response,
    // plus 1 result broadcast when completed.
    std::size_t messages = 0;
};

struct RoundLog {
    std::int64_t round = 0;
    std::vector<ClusterEvent> events;
    std::size_t completed = 0;
    std::size_t aborted = 0;
    std::size_t timed_out = 0;
    // Counted on the simulated radio, independently of the per-event charges.
    std::size_t radio_messages = 0;
    std::size_t double_locks = 0;
    std::size_t leaked_locks = 0;

    std::size_t charged_messages() const;
};

// One asynchronous round of cluster formation, measurement, update and
// release. Heads declare in ascending index order; a node already locked by
// an earlier head loses contention.
RoundLog protocol_round(MobileNetworkState& state, Rng& rng, const ProtocolConfig& cfg);

// Least-squares rotation/reflection and translation taking the estimated
// anchor rows onto `anchor_truth`, applied to every row.
Embedding anchor_align(const Embedding& estimates, std::span<const NodeId> anchors,
                       const Embedding& anchor_truth);

// max over t in [first, last] of ||est[t] - truth[t]||_F / N, where index t
// of each sequence is slot t.
double localization_error(std::span<const Embedding> estimates, std::span<const Embedding> truth,
                          std::int64_t first, std::int64_t last);

// ||est - truth||_F / N after aligning est to the anchors (unaligned with
// fewer than 3 anchors).
double aligned_error(const MobileNetworkState& state);
double aligned_error(const Embedding& estimates, const MobileNetworkState& state);

struct LocalizeConfig {
    Eigen::Index nodes = 50;
    Eigen::Index anchors = 5;
    MobilityConfig mobility;
    ProtocolConfig protocol;
    std::int64_t rounds = 700;
    // Rounds between anchor alignments of the live estimates; 0 disables.
    std::int64_t align_every = 10;
    std::uint64_t seed = 1;
    bool keep_snapshots = false;

    void validate() const;
};

struct LocalizationRecord {
    std::int64_t t = 0;
    double e_loc = 0.0;
    std::size_t clusters = 0;
    std::size_t messages = 0;
};

struct ProtocolTotals {
    std::size_t rounds = 0;
    std::size_t completed = 0;
    std::size_t aborted = 0;
    std::size_t timed_out = 0;
    std::size_t radio_messages = 0;
    std::size_t charged_messages = 0;
    std::size_t double_locks = 0;
    std::size_t leaked_locks = 0;
    std::size_t bad_releases = 0;
};

struct LocalizationRun {
    std::vector<LocalizationRecord> records;  // t = 0 .. rounds
    std::vector<Embedding> estimates;         // aligned, when snapshots are kept
    std::vector<Embedding> truth;
    ProtocolTotals totals;
    MobileNetworkState final;
};

// Stochastic protocol on a mobile network.
LocalizationRun run_localization(const LocalizeConfig& cfg);

// Batch SMACOF competitor: every `period` rounds all in-range distances are
// measured and SMACOF is run to convergence from the previous solution; the
// result becomes available `period` rounds later.
LocalizationRun run_smacof_competitor(const LocalizeConfig& cfg, std::int64_t period = 50,
                                      double tol = 1e-6, int max_iters = 1000);

}  // namespace smds
