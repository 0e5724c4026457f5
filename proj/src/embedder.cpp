#include "smds/embedder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "smds/parallel.hpp"
#include "smds/rng.hpp"
#include "smds/stress.hpp"

namespace smds {

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed: return "completed";
        case RunStatus::truncated: return "truncated";
        case RunStatus::diverged: return "diverged";
    }
    return "completed";
}

std::string to_string(MuSchedule::Kind kind) {
    switch (kind) {
        case MuSchedule::Kind::constant: return "constant";
        case MuSchedule::Kind::piecewise: return "piecewise";
        case MuSchedule::Kind::reciprocal: return "reciprocal";
    }
    return "constant";
}

MuSchedule MuSchedule::constant(double mu) {
    if (!(mu > 0.0 && mu <= 1.0)) throw InvalidInput("mu must lie in (0, 1]");
    MuSchedule s;
    s.kind_ = Kind::constant;
    s.values_ = {mu};
    return s;
}

MuSchedule MuSchedule::piecewise(std::vector<std::int64_t> breakpoints, std::vector<double> values) {
    if (values.size() != breakpoints.size() + 1)
        throw InvalidInput("piecewise schedule needs one more value than breakpoints");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
        if (breakpoints[k] <= breakpoints[k - 1])
            throw InvalidInput("schedule breakpoints must be strictly increasing");
    for (double v : values)
        if (!(v > 0.0 && v <= 1.0)) throw InvalidInput("schedule values must lie in (0, 1]");
    MuSchedule s;
    s.kind_ = Kind::piecewise;
    s.breakpoints_ = std::move(breakpoints);
    s.values_ = std::move(values);
    return s;
}

MuSchedule MuSchedule::reciprocal(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("reciprocal schedule scale must be positive");
    MuSchedule s;
    s.kind_ = Kind::reciprocal;
    s.scale_ = c;
    s.values_.clear();
    return s;
}

MuSchedule MuSchedule::geometric_steps(double first, double last, int steps, std::int64_t length) {
    if (steps < 1 || length < 1) throw InvalidInput("geometric schedule needs steps >= 1 and length >= 1");
    std::vector<double> values;
    std::vector<std::int64_t> breakpoints;
    for (int k = 0; k < steps; ++k) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(k) / (steps - 1);
        values.push_back(first * std::pow(last / first, frac));
        if (k + 1 < steps) breakpoints.push_back(length * (k + 1));
    }
    return piecewise(std::move(breakpoints), std::move(values));
}

double MuSchedule::at(std::int64_t t) const {
    switch (kind_) {
        case Kind::constant: return values_.front();
        case Kind::piecewise: {
            const auto k = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin();
            return values_[static_cast<std::size_t>(k)];
        }
        case Kind::reciprocal: return std::min(1.0, scale_ / (1.0 + static_cast<double>(t)));
    }
    return values_.front();
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

TraceRecord evaluate(const Embedding& X, const ObservationBatch& eval, std::int64_t t, double mu,
                     double normalizer) {
    TraceRecord r;
    r.t = t;
    r.mu = mu;
    r.stress = stress(X, eval);
    r.stress_norm = normalizer > 0.0 ? r.stress / normalizer : 0.0;
    return r;
}

bool should_record(std::int64_t t, std::int64_t last, std::int64_t every) {
    return t == last || every <= 1 || t % every == 0;
}

ClusterPartition slot_partition(const StochasticConfig& cfg, Eigen::Index N, std::int64_t t,
                                std::size_t sample) {
    Rng rng = make_rng(cfg.sampler.seed,
                       {stream::partition, static_cast<std::uint64_t>(t), sample});
    ClusterPartition part = partition_nodes(N, cfg.sampler.p, rng);
    part.slot = t;
    return part;
}

// Samples pairs of cluster j, looks them up and assigns weights.
std::vector<Observation> draw_cluster(const DissimilarityProvider& provider,
                                      const StochasticConfig& cfg, const ClusterPartition& part,
                                      std::int64_t t, std::size_t sample, std::size_t j,
                                      bool uncapped_sammon = false) {
    Rng rng = make_rng(cfg.sampler.seed,
                       {stream::cluster, static_cast<std::uint64_t>(t), sample, j});
    const auto pairs = sample_cluster_edges(part.clusters[j], cfg.sampler.budget, rng,
                                            cfg.sampler.require_connected);
    std::vector<Observation> obs;
    obs.reserve(pairs.size());
    std::normal_distribution<double> noise(0.0, 1.0);
    for (const auto& [a, b] : pairs) {
        const auto m = provider.measure(a, b);
        if (!m) continue;
        double delta = m->delta;
        if (cfg.noise_sigma > 0.0) delta += cfg.noise_sigma * noise(rng);
        obs.push_back({a, b, delta, m->weight});
    }
    auto weighted = assign_weights(obs, cfg.sampler.scheme, cfg.step.eps_w);
    if (uncapped_sammon && cfg.sampler.scheme == WeightScheme::sammon) {
        for (auto& o : weighted)
            if (o.weight > 0.0) o.weight = std::max(cfg.step.eps_w, 1.0 / o.delta);
    }
    return weighted;
}

void check_init(const Embedding& init, Eigen::Index N) {
    if (init.rows() != N)
        throw InvalidInput("initial embedding has " + std::to_string(init.rows()) +
                           " rows, expected " + std::to_string(N));
    if (init.cols() < 1) throw InvalidInput("embedding dimension must be at least 1");
    if (!init.allFinite()) throw InvalidInput("initial embedding has non-finite entries");
}

void validate_config(const StochasticConfig& cfg, Eigen::Index N) {
    cfg.sampler.validate(N);
    cfg.step.validate();
    if (cfg.slots < 0) throw InvalidInput("slots must be nonnegative");
    if (!(cfg.noise_sigma >= 0.0)) throw InvalidInput("noise_sigma must be nonnegative");
    if (cfg.options.eval_every < 1) throw InvalidInput("eval_every must be at least 1");
}

class Recorder {
public:
    Recorder(RunTrace& trace, const ObservationBatch& eval, const RunOptions& options,
             std::int64_t slots)
        : trace_(trace), eval_(eval), options_(options), slots_(slots),
          normalizer_(stress_normalizer(eval)) {}

    void record(const Embedding& X, std::int64_t t, double mu, std::size_t pairs, double wall_ms) {
        if (options_.keep_snapshots) trace_.snapshots.push_back(X);
        if (t != 0 && !should_record(t, slots_, options_.eval_every)) return;
        TraceRecord r = evaluate(X, eval_, t, mu, normalizer_);
        r.pairs = pairs;
        r.wall_ms = options_.timing ? wall_ms : 0.0;
        trace_.records.push_back(r);
    }

private:
    RunTrace& trace_;
    const ObservationBatch& eval_;
    const RunOptions& options_;
    std::int64_t slots_;
    double normalizer_;
};

}  // namespace

ObservationBatch evaluation_pairs(const DissimilarityProvider& provider, std::size_t count,
                                  WeightScheme scheme, double eps_w, std::uint64_t seed) {
    const Eigen::Index N = provider.node_count();
    ObservationBatch batch;
    if (N < 2 || count == 0) return batch;
    const std::uint64_t total = pair_count(N);
    Rng rng = make_rng(seed, {stream::eval});
    std::vector<Observation> obs;
    for (std::uint64_t k : sample_distinct(total, static_cast<std::size_t>(std::min<std::uint64_t>(total, count)), rng)) {
        const auto [a, b] = decode_pair_index(k, N);
        if (const auto m = provider.measure(a, b)) obs.push_back({a, b, m->delta, m->weight});
    }
    batch.entries = assign_weights(obs, scheme, eps_w);
    return batch;
}

double dissimilarity_magnitude(const DissimilarityProvider& provider, std::uint64_t seed,
                               std::size_t samples) {
    const Eigen::Index N = provider.node_count();
    if (N < 2) return 1.0;
    Rng rng = make_rng(seed, {stream::init, 1});
    std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
    double sum = 0.0;
    std::size_t found = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const Eigen::Index a = pick(rng);
        Eigen::Index b = pick(rng);
        if (a == b) continue;
        if (const auto d = provider.lookup(a, b)) {
            sum += *d;
            ++found;
        }
    }
    return found > 0 ? sum / static_cast<double>(found) : 1.0;
}

Embedding random_init(Eigen::Index node_count, Eigen::Index dim, double magnitude, std::uint64_t seed) {
    if (node_count < 0 || dim < 1) throw InvalidInput("random_init: bad dimensions");
    Rng rng = make_rng(seed, {stream::init});
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Embedding X(node_count, dim);
    for (Eigen::Index r = 0; r < node_count; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) X(r, c) = magnitude * u(rng);
    if (node_count > 0) X.rowwise() -= X.colwise().mean();
    return X;
}

RunTrace run_batch_smacof(const ObservationBatch& batch, const Embedding& init, double tol,
                          int max_iters, double relaxation, const RunOptions& options) {
    if (!(tol >= 0.0)) throw InvalidInput("tol must be nonnegative");
    if (max_iters < 0) throw InvalidInput("max_iters must be nonnegative");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw InvalidInput("relaxation must lie in (0, 1]");
    check_init(init, init.rows());
    const SmacofPlan plan(batch, init.rows(), options.solver);
    const double normalizer = stress_normalizer(batch);

    RunTrace trace;
    Embedding X = init;
    if (options.keep_snapshots) trace.snapshots.push_back(X);
    TraceRecord first = evaluate(X, batch, 0, relaxation, normalizer);
    first.pairs = batch.entries.size();
    trace.records.push_back(first);
    double prev = first.stress;
    for (int it = 1; it <= max_iters; ++it) {
        const auto start = Clock::now();
        X = plan.iterate(X, relaxation);
        TraceRecord r = evaluate(X, batch, it, relaxation, normalizer);
        r.pairs = batch.entries.size();
        r.wall_ms = options.timing ? elapsed_ms(start) : 0.0;
        trace.records.push_back(r);
        if (options.keep_snapshots) trace.snapshots.push_back(X);
        if (!std::isfinite(r.stress)) throw SolverError("batch SMACOF produced a non-finite stress");
        const bool done = prev == 0.0 || r.stress == 0.0 || (prev - r.stress) / prev < tol;
        prev = r.stress;
        if (done) break;
    }
    trace.final = std::move(X);
    return trace;
}

RunTrace run_stochastic(const DissimilarityProvider& provider, const Embedding& init,
                        const StochasticConfig& config) {
    const Eigen::Index N = provider.node_count();
    validate_config(config, N);
    check_init(init, N);
    const ObservationBatch eval = evaluation_pairs(provider, config.options.eval_pairs,
                                                   config.sampler.scheme, config.step.eps_w,
                                                   config.sampler.seed);
    RunTrace trace;
    trace.seed = config.sampler.seed;
    Recorder recorder(trace, eval, config.options, config.slots);
    Embedding X = init;
    recorder.record(X, 0, config.schedule.at(1), 0, 0.0);

    for (std::int64_t t = 1; t <= config.slots; ++t) {
        const auto start = Clock::now();
        const double mu = config.schedule.at(t);
        const ClusterPartition part = slot_partition(config, N, t, 0);
        std::vector<std::size_t> counts(part.clusters.size(), 0);
        parallel_for(part.clusters.size(), [&](std::size_t j) {
            const auto obs = draw_cluster(provider, config, part, t, 0, j);
            counts[j] = obs.size();
            apply_cluster_update(X, obs, mu, config.step.eps_x, config.options.solver);
        });
        const std::size_t pairs = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
        recorder.record(X, t, mu, pairs, elapsed_ms(start));
    }
    trace.final = std::move(X);
    return trace;
}

RunTrace run_stochastic(const BatchStream& stream, const Embedding& init,
                        const ObservationBatch& eval_batch, const MuSchedule& schedule,
                        const StepConfig& step, std::int64_t slots, const RunOptions& options) {
    step.validate();
    if (slots < 0) throw InvalidInput("slots must be nonnegative");
    check_init(init, init.rows());
    validate_batch(eval_batch, init.rows());
    RunTrace trace;
    Recorder recorder(trace, eval_batch, options, slots);
    Embedding X = init;
    recorder.record(X, 0, schedule.at(1), 0, 0.0);
    for (std::int64_t t = 1; t <= slots; ++t) {
        const auto start = Clock::now();
        auto batch = stream(t);
        if (!batch) {
            trace.status = RunStatus::truncated;
            if (!trace.records.empty() && trace.records.back().t != t - 1 && t > 1) {
                TraceRecord r = evaluate(X, eval_batch, t - 1, schedule.at(t - 1),
                                         stress_normalizer(eval_batch));
                trace.records.push_back(r);
            }
            break;
        }
        StepConfig cfg = step;
        cfg.mu = schedule.at(t);
        X = stochastic_step(X, *batch, cfg, options.solver);
        recorder.record(X, t, cfg.mu, batch->entries.size(), elapsed_ms(start));
    }
    trace.final = std::move(X);
    return trace;
}

RunTrace run_sgd(const DissimilarityProvider& provider, const Embedding& init,
                 const StochasticConfig& config) {
    const Eigen::Index N = provider.node_count();
    validate_config(config, N);
    check_init(init, N);
    const ObservationBatch eval = evaluation_pairs(provider, config.options.eval_pairs,
                                                   config.sampler.scheme, config.step.eps_w,
                                                   config.sampler.seed);
    RunTrace trace;
    trace.seed = config.sampler.seed;
    Recorder recorder(trace, eval, config.options, config.slots);
    Embedding X = init;
    recorder.record(X, 0, config.schedule.at(1), 0, 0.0);
    const double base = std::max(1.0, (X.rowwise() - X.colwise().mean()).norm());

    for (std::int64_t t = 1; t <= config.slots; ++t) {
        const auto start = Clock::now();
        const double mu = config.schedule.at(t);
        const ClusterPartition part = slot_partition(config, N, t, 0);
        std::vector<std::vector<Observation>> per(part.clusters.size());
        parallel_for(part.clusters.size(),
                     [&](std::size_t j) { per[j] = draw_cluster(provider, config, part, t, 0, j, true); });
        ObservationBatch batch;
        batch.slot = t;
        for (auto& v : per) batch.entries.insert(batch.entries.end(), v.begin(), v.end());
        SgdResult r = sgd_step(X, batch, mu);
        X = std::move(r.X);
        const bool blown = r.diverged || !X.allFinite() ||
                           (X.rowwise() - X.colwise().mean()).norm() > 1e6 * base;
        if (blown) {
            trace.status = RunStatus::diverged;
            TraceRecord rec;
            rec.t = t;
            rec.mu = mu;
            rec.stress = std::numeric_limits<double>::infinity();
            rec.stress_norm = rec.stress;
            rec.pairs = batch.entries.size();
            trace.records.push_back(rec);
            break;
        }
        recorder.record(X, t, mu, batch.entries.size(), elapsed_ms(start));
    }
    trace.final = std::move(X);
    return trace;
}

RunTrace run_averaged_oracle(const DissimilarityProvider& provider, const Embedding& init,
                             const OracleConfig& config) {
    const StochasticConfig& cfg = config.base;
    const Eigen::Index N = provider.node_count();
    validate_config(cfg, N);
    check_init(init, N);
    if (!config.closed_form && config.averaging_samples < 1)
        throw InvalidInput("averaging_samples must be at least 1");
    const ObservationBatch eval = evaluation_pairs(provider, cfg.options.eval_pairs,
                                                   cfg.sampler.scheme, cfg.step.eps_w,
                                                   cfg.sampler.seed);
    RunTrace trace;
    trace.seed = cfg.sampler.seed;
    Recorder recorder(trace, eval, cfg.options, cfg.slots);
    Embedding X = init;

    if (config.closed_form) {
        const Eigen::Index p = cfg.sampler.p;
        if (N % p != 0)
            throw InvalidInput("closed form needs p = " + std::to_string(p) + " to divide N = " +
                               std::to_string(N));
        if (cfg.sampler.scheme != WeightScheme::unity)
            throw InvalidInput("closed form needs unity weights");
        const bool full = std::visit(
            [p](const auto& b) {
                using B = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<B, PairCount>) return b.value >= pair_count(p);
                else return b.value >= 1.0;
            },
            cfg.sampler.budget);
        if (!full) throw InvalidInput("closed form needs every intra-cluster pair measured");
        Eigen::MatrixXd deltas = Eigen::MatrixXd::Zero(N, N);
        for (Eigen::Index m = 0; m < N; ++m) {
            for (Eigen::Index n = m + 1; n < N; ++n) {
                const auto d = provider.lookup(m, n);
                if (!d) throw InvalidInput("closed form needs a dissimilarity for every pair");
                deltas(m, n) = deltas(n, m) = *d;
            }
        }
        X.rowwise() -= X.colwise().mean();
        recorder.record(X, 0, cfg.schedule.at(1), 0, 0.0);
        const double ups = upsilon(N, p);
        for (std::int64_t t = 1; t <= cfg.slots; ++t) {
            const auto start = Clock::now();
            const double mu = cfg.schedule.at(t);
            const Eigen::MatrixXd Ba = closed_form_b_average(X, deltas, cfg.step.eps_x, N, p);
            X = averaged_step(X, Ba, mu, ups);
            recorder.record(X, t, mu, 0, elapsed_ms(start));
        }
        trace.final = std::move(X);
        return trace;
    }

    recorder.record(X, 0, cfg.schedule.at(1), 0, 0.0);
    const std::size_t K = config.averaging_samples;
    for (std::int64_t t = 1; t <= cfg.slots; ++t) {
        const auto start = Clock::now();
        const double mu = cfg.schedule.at(t);
        Eigen::MatrixXd direction = Eigen::MatrixXd::Zero(X.rows(), X.cols());
        std::size_t pairs = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const ClusterPartition part = slot_partition(cfg, N, t, k);
            Embedding Y = X;
            std::vector<std::size_t> counts(part.clusters.size(), 0);
            parallel_for(part.clusters.size(), [&](std::size_t j) {
                const auto obs = draw_cluster(provider, cfg, part, t, k, j);
                counts[j] = obs.size();
                apply_cluster_update(Y, obs, 1.0, cfg.step.eps_x, cfg.options.solver);
            });
            direction += Y - X;
            pairs += std::accumulate(counts.begin(), counts.end(), std::size_t{0});
        }
        X += (mu / static_cast<double>(K)) * direction;
        recorder.record(X, t, mu, pairs, elapsed_ms(start));
    }
    trace.final = std::move(X);
    return trace;
}

double hovering_deviation(std::span<const Embedding> a, std::span<const Embedding> b,
                          std::int64_t horizon) {
    if (horizon < 1) throw InvalidInput("horizon must be at least 1");
    const auto need = static_cast<std::size_t>(horizon) + 1;
    if (a.size() < need || b.size() < need)
        throw InvalidInput("traces hold fewer than horizon + 1 snapshots");
    if (a[0].rows() != b[0].rows() || a[0].cols() != b[0].cols() || a[0] != b[0])
        throw InvalidInput("traces do not share the same initial embedding");
    double worst = 0.0;
    for (std::size_t t = 1; t < need; ++t) {
        if (a[t].rows() != b[t].rows() || a[t].cols() != b[t].cols())
            throw InvalidInput("trace snapshots differ in shape at t = " + std::to_string(t));
        worst = std::max(worst, (a[t] - b[t]).norm());
    }
    return worst;
}

SteadyState steady_state_stats(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("steady-state window is empty");
    SteadyState s;
    s.eta_min = *std::min_element(values.begin(), values.end());
    s.eta_max = *std::max_element(values.begin(), values.end());
    s.eta_mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

SteadyState steady_state_stats(std::span<const TraceRecord> records, std::int64_t first,
                               std::int64_t last) {
    if (first > last) throw InvalidInput("steady-state window is empty");
    std::vector<double> values;
    for (const auto& r : records)
        if (r.t >= first && r.t <= last) values.push_back(r.stress);
    return steady_state_stats(values);
}

}  // namespace smds
