#include "smds/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/SVD>

#include "smds/embedder.hpp"
#include "smds/parallel.hpp"
#include "smds/stress.hpp"

namespace smds {

void MobilityConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
    if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) throw InvalidInput("sigma_v must be nonnegative");
}

LockTable::LockTable(Eigen::Index node_count)
    : holder_(static_cast<std::size_t>(node_count), none) {}

bool LockTable::acquire(NodeId node, NodeId owner) {
    auto& h = holder_[static_cast<std::size_t>(node)];
    if (h != none) {
        ++double_locks_;
        return false;
    }
    h = owner;
    return true;
}

void LockTable::release(NodeId node, NodeId owner) {
    auto& h = holder_[static_cast<std::size_t>(node)];
    if (h != owner) {
        ++bad_releases_;
        return;
    }
    h = none;
}

std::size_t LockTable::held() const {
    return static_cast<std::size_t>(std::count_if(holder_.begin(), holder_.end(),
                                                  [](NodeId h) { return h != none; }));
}

MobileNetworkState deploy_network(Eigen::Index node_count, Eigen::Index anchor_count,
                                  const MobilityConfig& mobility, Rng& rng) {
    if (node_count < 2) throw InvalidInput("a network needs at least 2 nodes");
    if (anchor_count < 0 || anchor_count >= node_count)
        throw InvalidInput("anchor count must lie in [0, N)");
    mobility.validate();
    MobileNetworkState s;
    s.side = std::sqrt(static_cast<double>(node_count));
    s.comm_radius = s.side / 2.0;
    s.truth.resize(node_count, 2);
    s.velocities.resize(node_count, 2);
    s.estimates.resize(node_count, 2);
    std::uniform_real_distribution<double> place(0.0, s.side);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index m = 0; m < node_count; ++m)
        for (int c = 0; c < 2; ++c) s.truth(m, c) = place(rng);
    for (Eigen::Index m = 0; m < node_count; ++m)
        for (int c = 0; c < 2; ++c) s.velocities(m, c) = mobility.sigma_v * gauss(rng);
    const double init_sd = std::sqrt(static_cast<double>(node_count) / 100.0);
    for (Eigen::Index m = 0; m < node_count; ++m)
        for (int c = 0; c < 2; ++c) s.estimates(m, c) = s.truth(m, c) + init_sd * gauss(rng);
    std::vector<NodeId> ids(static_cast<std::size_t>(node_count));
    std::iota(ids.begin(), ids.end(), NodeId{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    s.anchors.assign(ids.begin(), ids.begin() + anchor_count);
    std::sort(s.anchors.begin(), s.anchors.end());
    s.locks = LockTable(node_count);
    return s;
}

namespace {

void reflect(double& x, double& v, double side) {
    for (int guard = 0; guard < 8 && (x < 0.0 || x > side); ++guard) {
        if (x < 0.0) x = -x;
        else x = 2.0 * side - x;
        v = -v;
    }
    x = std::clamp(x, 0.0, side);
}

}  // namespace

void step_mobility(MobileNetworkState& state, const MobilityConfig& cfg, Rng& rng) {
    cfg.validate();
    const double keep = cfg.alpha;
    const double fresh = std::sqrt(std::max(0.0, 1.0 - cfg.alpha * cfg.alpha)) * cfg.sigma_v;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index m = 0; m < state.size(); ++m) {
        for (int c = 0; c < 2; ++c) {
            double& v = state.velocities(m, c);
            v = keep * v + fresh * gauss(rng);
            double& x = state.truth(m, c);
            x += v;
            reflect(x, v, state.side);
        }
    }
}

ObservationBatch measure_distances(const MobileNetworkState& state, double noise_sigma, Rng& rng) {
    if (!(noise_sigma >= 0.0)) throw InvalidInput("noise_sigma must be nonnegative");
    ObservationBatch batch;
    batch.slot = state.round;
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double r2 = state.comm_radius * state.comm_radius;
    for (Eigen::Index m = 0; m < state.size(); ++m) {
        for (Eigen::Index n = m + 1; n < state.size(); ++n) {
            const double sq = (state.truth.row(m) - state.truth.row(n)).squaredNorm();
            if (sq > r2) continue;
            double delta = std::sqrt(sq);
            if (noise_sigma > 0.0) delta += noise_sigma * gauss(rng);
            batch.entries.push_back({m, n, delta, delta > 0.0 ? 1.0 : 0.0});
        }
    }
    return batch;
}

void ProtocolConfig::validate() const {
    if (!(target_cluster_size >= 1.0)) throw InvalidInput("target cluster size must be at least 1");
    if (max_members < 1) throw InvalidInput("max_members must be at least 1");
    if (min_members < 1 || min_members > max_members)
        throw InvalidInput("min_members must lie in [1, max_members]");
    if (!(timeout_probability >= 0.0 && timeout_probability <= 1.0))
        throw InvalidInput("timeout_probability must lie in [0, 1]");
    if (!(noise_sigma >= 0.0)) throw InvalidInput("noise_sigma must be nonnegative");
    step.validate();
}

std::size_t RoundLog::charged_messages() const {
    std::size_t total = 0;
    for (const auto& e : events) total += e.messages;
    return total;
}

RoundLog protocol_round(MobileNetworkState& state, Rng& rng, const ProtocolConfig& cfg) {
    cfg.validate();
    RoundLog log;
    log.round = ++state.round;
    const Eigen::Index N = state.size();
    const double declare_p = 1.0 / cfg.target_cluster_size;
    const double r2 = state.comm_radius * state.comm_radius;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::uint64_t measure_seed = rng();

    // One draw per node keeps the stream layout independent of lock state.
    std::vector<NodeId> heads;
    for (Eigen::Index m = 0; m < N; ++m) {
        const double u = unit(rng);
        if (u < declare_p && state.locks.available(m)) heads.push_back(m);
    }

    std::vector<std::size_t> active;
    for (NodeId head : heads) {
        ClusterEvent ev;
        ev.head = head;
        if (!state.locks.available(head)) {
            ev.outcome = ClusterOutcome::lost_contention;
            log.events.push_back(std::move(ev));
            continue;
        }
        state.locks.acquire(head, head);
        ++log.radio_messages;  // solicitation
        std::vector<std::pair<double, NodeId>> near;
        for (Eigen::Index n = 0; n < N; ++n) {
            if (n == head || !state.locks.available(n)) continue;
            const double sq = (state.truth.row(head) - state.truth.row(n)).squaredNorm();
            if (sq <= r2) near.emplace_back(sq, n);
        }
        std::sort(near.begin(), near.end());
        if (near.size() > static_cast<std::size_t>(cfg.max_members))
            near.resize(static_cast<std::size_t>(cfg.max_members));
        for (const auto& [sq, n] : near) ev.members.push_back(n);
        log.radio_messages += ev.members.size();  // responses
        if (ev.members.size() < static_cast<std::size_t>(cfg.min_members)) {
            ev.outcome = ClusterOutcome::aborted;
            ev.messages = 1 + ev.members.size();
            state.locks.release(head, head);
            ++log.aborted;
            log.events.push_back(std::move(ev));
            continue;
        }
        for (NodeId n : ev.members) state.locks.acquire(n, head);
        if (cfg.timeout_probability > 0.0 && unit(rng) < cfg.timeout_probability) {
            ev.outcome = ClusterOutcome::timed_out;
            ev.messages = 1 + ev.members.size();
            ++log.timed_out;
        } else {
            ev.outcome = ClusterOutcome::completed;
            ev.messages = 2 + ev.members.size();
            ++log.completed;
            active.push_back(log.events.size());
        }
        log.events.push_back(std::move(ev));
    }

    // Locks are still held here; every in-flight cluster is disjoint.
    parallel_for(active.size(), [&](std::size_t k) {
        const auto& ev = log.events[active[k]];
        Rng local = make_rng(measure_seed, {stream::measure, static_cast<std::uint64_t>(ev.head)});
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<Observation> obs;
        obs.reserve(ev.members.size());
        for (NodeId n : ev.members) {
            double delta = (state.truth.row(ev.head) - state.truth.row(n)).norm();
            if (cfg.noise_sigma > 0.0) delta += cfg.noise_sigma * gauss(local);
            obs.push_back({std::min(ev.head, n), std::max(ev.head, n), delta, 1.0});
        }
        const auto weighted = assign_weights(obs, cfg.scheme, cfg.step.eps_w);
        apply_cluster_update(state.estimates, weighted, cfg.step.mu, cfg.step.eps_x, cfg.solver);
    });
    for (std::size_t k : active) {
        (void)k;
        ++log.radio_messages;  // result broadcast
    }

    for (const auto& ev : log.events) {
        if (ev.outcome == ClusterOutcome::completed || ev.outcome == ClusterOutcome::timed_out) {
            for (NodeId n : ev.members) state.locks.release(n, ev.head);
            state.locks.release(ev.head, ev.head);
        }
    }
    log.double_locks = state.locks.double_locks();
    log.leaked_locks = state.locks.held();
    return log;
}

Embedding anchor_align(const Embedding& estimates, std::span<const NodeId> anchors,
                       const Embedding& anchor_truth) {
    const Eigen::Index P = estimates.cols();
    const auto k = static_cast<Eigen::Index>(anchors.size());
    if (anchor_truth.rows() != k || anchor_truth.cols() != P)
        throw InvalidInput("anchor truth must hold one row per anchor");
    if (k < P + 1)
        throw InvalidInput("alignment needs at least " + std::to_string(P + 1) + " anchors, got " +
                           std::to_string(k));
    Eigen::MatrixXd A(k, P);
    for (Eigen::Index r = 0; r < k; ++r) {
        const NodeId id = anchors[static_cast<std::size_t>(r)];
        if (id < 0 || id >= estimates.rows()) throw InvalidInput("anchor index out of range");
        A.row(r) = estimates.row(id);
    }
    const Eigen::RowVectorXd mean_a = A.colwise().mean();
    const Eigen::RowVectorXd mean_b = anchor_truth.colwise().mean();
    const Eigen::MatrixXd Ac = A.rowwise() - mean_a;
    const Eigen::MatrixXd Bc = anchor_truth.rowwise() - mean_b;

    for (const Eigen::MatrixXd* M : {&Ac, &Bc}) {
        Eigen::JacobiSVD<Eigen::MatrixXd> spread(*M);
        const auto& sv = spread.singularValues();
        if (sv(0) == 0.0 || sv(P - 1) <= 1e-9 * sv(0))
            throw InvalidInput("anchors are collinear; the alignment is underdetermined");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ac.transpose() * Bc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd R = svd.matrixU() * svd.matrixV().transpose();
    Embedding out = (estimates.rowwise() - mean_a) * R;
    out.rowwise() += mean_b;
    return out;
}

double localization_error(std::span<const Embedding> estimates, std::span<const Embedding> truth,
                          std::int64_t first, std::int64_t last) {
    if (first > last || first < 0) throw InvalidInput("localization window is empty");
    const auto end = static_cast<std::size_t>(last);
    if (end >= estimates.size() || end >= truth.size())
        throw InvalidInput("localization window extends past the trace");
    double worst = 0.0;
    for (auto t = static_cast<std::size_t>(first); t <= end; ++t) {
        if (estimates[t].rows() != truth[t].rows() || estimates[t].cols() != truth[t].cols())
            throw InvalidInput("estimate and truth shapes differ");
        const double n = static_cast<double>(truth[t].rows());
        worst = std::max(worst, (estimates[t] - truth[t]).norm() / n);
    }
    return worst;
}

namespace {

Embedding anchor_rows(const MobileNetworkState& state) {
    Embedding T(static_cast<Eigen::Index>(state.anchors.size()), 2);
    for (std::size_t k = 0; k < state.anchors.size(); ++k)
        T.row(static_cast<Eigen::Index>(k)) = state.truth.row(state.anchors[k]);
    return T;
}

bool can_align(const MobileNetworkState& state) { return state.anchors.size() >= 3; }

Embedding aligned_copy(const Embedding& est, const MobileNetworkState& state) {
    if (!can_align(state)) return est;
    try {
        return anchor_align(est, state.anchors, anchor_rows(state));
    } catch (const InvalidInput&) {
        return est;
    }
}

// Aligns in place and pins anchors to their known positions.
void align_live(Embedding& est, const MobileNetworkState& state) {
    if (!can_align(state)) return;
    est = aligned_copy(est, state);
    for (NodeId a : state.anchors) est.row(a) = state.truth.row(a);
}

struct Streams {
    Rng deploy;
    Rng mobility;
    Rng protocol;
    Rng measure;
};

Streams make_streams(std::uint64_t seed) {
    return {make_rng(seed, {stream::deploy}), make_rng(seed, {stream::mobility}),
            make_rng(seed, {stream::protocol}), make_rng(seed, {stream::measure})};
}

}  // namespace

double aligned_error(const Embedding& estimates, const MobileNetworkState& state) {
    return (aligned_copy(estimates, state) - state.truth).norm() / static_cast<double>(state.size());
}

double aligned_error(const MobileNetworkState& state) { return aligned_error(state.estimates, state); }

void LocalizeConfig::validate() const {
    if (nodes < 2) throw InvalidInput("nodes must be at least 2");
    if (anchors < 0 || anchors >= nodes) throw InvalidInput("anchors must lie in [0, nodes)");
    if (rounds < 0) throw InvalidInput("rounds must be nonnegative");
    if (align_every < 0) throw InvalidInput("align_every must be nonnegative");
    mobility.validate();
    protocol.validate();
}

LocalizationRun run_localization(const LocalizeConfig& cfg) {
    cfg.validate();
    Streams rs = make_streams(cfg.seed);
    LocalizationRun run;
    MobileNetworkState state = deploy_network(cfg.nodes, cfg.anchors, cfg.mobility, rs.deploy);
    auto snapshot = [&] {
        if (!cfg.keep_snapshots) return;
        run.estimates.push_back(aligned_copy(state.estimates, state));
        run.truth.push_back(state.truth);
    };
    run.records.push_back({0, aligned_error(state), 0, 0});
    snapshot();
    for (std::int64_t t = 1; t <= cfg.rounds; ++t) {
        step_mobility(state, cfg.mobility, rs.mobility);
        const RoundLog log = protocol_round(state, rs.protocol, cfg.protocol);
        run.totals.rounds += 1;
        run.totals.completed += log.completed;
        run.totals.aborted += log.aborted;
        run.totals.timed_out += log.timed_out;
        run.totals.radio_messages += log.radio_messages;
        run.totals.charged_messages += log.charged_messages();
        run.totals.leaked_locks += log.leaked_locks;
        if (cfg.align_every > 0 && t % cfg.align_every == 0) align_live(state.estimates, state);
        run.records.push_back({t, aligned_error(state), log.completed, log.radio_messages});
        snapshot();
    }
    run.totals.double_locks = state.locks.double_locks();
    run.totals.bad_releases = state.locks.bad_releases();
    run.final = std::move(state);
    return run;
}

LocalizationRun run_smacof_competitor(const LocalizeConfig& cfg, std::int64_t period, double tol,
                                      int max_iters) {
    cfg.validate();
    if (period < 1) throw InvalidInput("period must be at least 1");
    Streams rs = make_streams(cfg.seed);
    LocalizationRun run;
    MobileNetworkState state = deploy_network(cfg.nodes, cfg.anchors, cfg.mobility, rs.deploy);
    Embedding published = state.estimates;
    Embedding working = state.estimates;
    bool pending = false;
    auto snapshot = [&] {
        if (!cfg.keep_snapshots) return;
        run.estimates.push_back(aligned_copy(published, state));
        run.truth.push_back(state.truth);
    };
    run.records.push_back({0, aligned_error(published, state), 0, 0});
    snapshot();
    for (std::int64_t t = 1; t <= cfg.rounds; ++t) {
        step_mobility(state, cfg.mobility, rs.mobility);
        state.round = t;
        std::size_t messages = 0;
        if (t % period == 0) {
            if (pending) {
                published = working;
                align_live(published, state);
            }
            const ObservationBatch batch = measure_distances(state, cfg.protocol.noise_sigma, rs.measure);
            messages = batch.entries.size();
            working = run_batch_smacof(batch, published, tol, max_iters).final;
            pending = true;
        }
        run.totals.rounds += 1;
        run.totals.radio_messages += messages;
        run.totals.charged_messages += messages;
        run.records.push_back({t, aligned_error(published, state), 0, messages});
        snapshot();
    }
    state.estimates = published;
    run.final = std::move(state);
    return run;
}

}  // namespace smds
