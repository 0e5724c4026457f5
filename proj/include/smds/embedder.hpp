#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smds/graph_linalg.hpp"
#include "smds/provider.hpp"
#include "smds/sampling.hpp"
#include "smds/trace.hpp"
#include "smds/types.hpp"

namespace smds {

enum class RunStatus { completed, truncated, diverged };

std::string to_string(RunStatus status);

struct RunTrace {
    std::vector<TraceRecord> records;
    Embedding final;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::completed;
    // X_0, X_1, ... when snapshots were requested.
    std::vector<Embedding> snapshots;
};

// Step-size sequence indexed by slot t = 1, 2, ...
class MuSchedule {
public:
    enum class Kind { constant, piecewise, reciprocal };

    static MuSchedule constant(double mu);
    // values[k] holds for breakpoints[k-1] < t <= breakpoints[k].
    static MuSchedule piecewise(std::vector<std::int64_t> breakpoints, std::vector<double> values);
    // min(1, c / (1 + t)).
    static MuSchedule reciprocal(double c);
    // `steps` geometric levels from `first` to `last`, each held for `length` slots.
    static MuSchedule geometric_steps(double first, double last, int steps, std::int64_t length);

    double at(std::int64_t t) const;
    Kind kind() const { return kind_; }
    const std::vector<std::int64_t>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }
    double scale() const { return scale_; }

private:
    Kind kind_ = Kind::constant;
    std::vector<std::int64_t> breakpoints_;
    std::vector<double> values_{0.1};
    double scale_ = 1.0;
};

std::string to_string(MuSchedule::Kind kind);

struct RunOptions {
    // Fixed pair subsample for stress evaluation; all pairs if fewer exist.
    std::size_t eval_pairs = 100000;
    // Record every k-th slot (the last slot is always recorded).
    std::int64_t eval_every = 1;
    bool keep_snapshots = false;
    // Wall-clock durations in the trace. Off keeps traces bit-reproducible.
    bool timing = false;
    SolverOptions solver;
};

// Batch SMACOF until the relative stress decrease drops below tol or
// max_iters is reached. The trace starts with the initial stress at t = 0.
RunTrace run_batch_smacof(const ObservationBatch& batch, const Embedding& init, double tol = 1e-6,
                          int max_iters = 1000, double relaxation = 1.0,
                          const RunOptions& options = {});

struct StochasticConfig {
    SamplerConfig sampler;
    StepConfig step;
    MuSchedule schedule = MuSchedule::constant(0.1);
    // Additive N(0, sigma^2) measurement noise; negative results get weight 0.
    double noise_sigma = 0.0;
    std::int64_t slots = 1000;
    RunOptions options;
};

// Per slot: random partition, per-cluster pair sampling, provider lookups,
// weights, cluster updates. Stress is tracked on noise-free evaluation pairs.
RunTrace run_stochastic(const DissimilarityProvider& provider, const Embedding& init,
                        const StochasticConfig& config);

// Observation stream variant: each batch is split into its connected
// components. An exhausted stream truncates the run.
using BatchStream = std::function<std::optional<ObservationBatch>(std::int64_t slot)>;
RunTrace run_stochastic(const BatchStream& stream, const Embedding& init,
                        const ObservationBatch& eval_batch, const MuSchedule& schedule,
                        const StepConfig& step, std::int64_t slots, const RunOptions& options = {});

// Plain gradient steps X + mu (B X - L X) on the same sampled batches.
// Sammon weights are 1/delta without the cap at 1. Stops with status
// `diverged` when the iterates blow up.
RunTrace run_sgd(const DissimilarityProvider& provider, const Embedding& init,
                 const StochasticConfig& config);

struct OracleConfig {
    StochasticConfig base;
    // Fresh draws averaged per slot in empirical mode.
    std::size_t averaging_samples = 100;
    // Use the closed-form expectation instead of sampling. Needs p | N,
    // unity weights and every intra-cluster pair measured.
    bool closed_form = false;
};

// Deterministic companion recursion X <- X + mu E[update direction].
// In empirical mode draw 0 of each slot uses the same random streams as
// run_stochastic with the same seed.
RunTrace run_averaged_oracle(const DissimilarityProvider& provider, const Embedding& init,
                             const OracleConfig& config);

// max over 1 <= t <= horizon of ||A_t - B_t||_F. Both sequences start at the
// same X_0 and must hold at least horizon + 1 snapshots.
double hovering_deviation(std::span<const Embedding> a, std::span<const Embedding> b,
                          std::int64_t horizon);

struct SteadyState {
    double eta_min = 0.0;
    double eta_mean = 0.0;
    double eta_max = 0.0;
};

// Statistics of stress over records with first <= t <= last.
SteadyState steady_state_stats(std::span<const TraceRecord> records, std::int64_t first,
                               std::int64_t last);
SteadyState steady_state_stats(std::span<const double> values);

// Uniform cube of side `magnitude`, then centered.
Embedding random_init(Eigen::Index node_count, Eigen::Index dim, double magnitude,
                      std::uint64_t seed);

// Mean dissimilarity over up to `samples` random pairs (1 when none found).
double dissimilarity_magnitude(const DissimilarityProvider& provider, std::uint64_t seed,
                               std::size_t samples = 1000);

// Noise-free evaluation pairs, drawn once per seed.
ObservationBatch evaluation_pairs(const DissimilarityProvider& provider, std::size_t count,
                                  WeightScheme scheme, double eps_w, std::uint64_t seed);

}  // namespace smds
