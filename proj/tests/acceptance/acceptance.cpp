// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <malloc.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smds/diagnostics.hpp"
#include "smds/embedder.hpp"
#include "smds/localization.hpp"
#include "smds/parallel.hpp"
#include "smds/stress.hpp"

// ---- heap accounting -------------------------------------------------------

extern "C" {
void* __libc_malloc(std::size_t);
void __libc_free(void*);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
}

namespace heap {
std::atomic<long long> live{0};
std::atomic<long long> peak{0};

inline void add(void* p) {
    if (!p) return;
    const long long now = live.fetch_add(static_cast<long long>(malloc_usable_size(p))) +
                          static_cast<long long>(malloc_usable_size(p));
    long long prev = peak.load(std::memory_order_relaxed);
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
}

inline void sub(void* p) {
    if (p) live.fetch_sub(static_cast<long long>(malloc_usable_size(p)));
}

void reset_peak() { peak.store(live.load()); }
}  // namespace heap

extern "C" {
void* malloc(std::size_t n) {
    void* p = __libc_malloc(n);
    heap::add(p);
    return p;
}
void free(void* p) {
    heap::sub(p);
    __libc_free(p);
}
void* calloc(std::size_t a, std::size_t b) {
    void* p = __libc_calloc(a, b);
    heap::add(p);
    return p;
}
void* realloc(void* old, std::size_t n) {
    heap::sub(old);
    void* p = __libc_realloc(old, n);
    if (p) heap::add(p);
    else if (old && n != 0) heap::add(old);
    return p;
}
void* memalign(std::size_t align, std::size_t n) {
    void* p = __libc_memalign(align, n);
    heap::add(p);
    return p;
}
void* aligned_alloc(std::size_t align, std::size_t n) { return memalign(align, n); }
int posix_memalign(void** out, std::size_t align, std::size_t n) {
    void* p = memalign(align, n);
    if (!p) return 12;
    *out = p;
    return 0;
}
}

// ---- helpers -----------------------------------------------------------------

using namespace smds;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::MatrixXd square_points(Eigen::Index n, std::uint64_t seed, double side = 10.0) {
    Rng rng = make_rng(seed, {99});
    std::uniform_real_distribution<double> u(0.0, side);
    Eigen::MatrixXd P(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        P(i, 0) = u(rng);
        P(i, 1) = u(rng);
    }
    return P;
}

Embedding centered(Embedding X) {
    X.rowwise() -= X.colwise().mean();
    return X;
}

Embedding gaussian(Eigen::Index n, Eigen::Index dim, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Embedding X(n, dim);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = g(rng);
    return X;
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& P) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(P.rows(), P.rows());
    for (Eigen::Index m = 0; m < P.rows(); ++m)
        for (Eigen::Index n = m + 1; n < P.rows(); ++n) D(m, n) = D(n, m) = (P.row(m) - P.row(n)).norm();
    return D;
}

// Setup shared by the hovering and steady-state criteria: N = 100 points in a
// 10 x 10 square, clusters of 25, 35% of pairs, noise variance 0.01.
StochasticConfig sim_config(std::uint64_t seed, double mu, std::int64_t slots) {
    StochasticConfig c;
    c.sampler.p = 25;
    c.sampler.budget = PairFraction{0.35};
    c.sampler.seed = seed;
    c.noise_sigma = 0.1;
    c.step.mu = mu;
    c.schedule = MuSchedule::constant(mu);
    c.slots = slots;
    return c;
}

// ---- criteria ------------------------------------------------------------------

Outcome majorization_monotonicity() {
    const auto start = Clock::now();
    int violations = 0;
    double worst = 0.0;
    std::size_t iterations = 0;
    for (std::uint64_t inst = 1; inst <= 100; ++inst) {
        Rng rng = make_rng(inst, {1});
        const Eigen::MatrixXd P = square_points(100, inst);
        std::normal_distribution<double> noise(0.0, 0.5);
        std::uniform_real_distribution<double> w(0.05, 1.0);
        ObservationBatch b;
        for (Eigen::Index m = 0; m < 100; ++m)
            for (Eigen::Index n = m + 1; n < 100; ++n)
                b.entries.push_back({m, n, std::abs((P.row(m) - P.row(n)).norm() + noise(rng)) + 1e-3, w(rng)});
        const auto tr = run_batch_smacof(b, random_init(100, 2, 10.0, inst), 1e-6, 1000);
        iterations += tr.records.size() - 1;
        for (std::size_t k = 1; k < tr.records.size(); ++k) {
            const double prev = tr.records[k - 1].stress;
            const double rise = (tr.records[k].stress - prev) / prev;
            worst = std::max(worst, rise);
            if (rise > 1e-10) ++violations;
        }
    }
    const double secs = seconds_since(start);
    return {violations == 0 && secs < 30.0,
            fmt("100 instances, %zu iterations, %d increases, worst relative change %.2e, %.1f s", iterations,
                violations, worst, secs)};
}

Outcome equivalence_suite() {
    Rng rng(2);
    std::uniform_int_distribution<Eigen::Index> size(3, 12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_a = 0.0, worst_b = 0.0, worst_c = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::Index n = size(rng);
        ObservationBatch b;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) b.entries.push_back({i, j, 0.2 + 3 * unit(rng), 0.05 + unit(rng) * 0.95});
        const Embedding X = centered(gaussian(n, 2, rng));
        StepConfig cfg;
        cfg.mu = 1.0;
        cfg.eps_x = 0.0;
        const Embedding s = smacof_iterate(X, b);
        const Embedding st = stochastic_step(X, b, cfg);
        worst_a = std::max(worst_a, (st - s).cwiseAbs().maxCoeff() / std::max(1.0, s.cwiseAbs().maxCoeff()));
    }
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::Index n = size(rng);
        const Embedding X = gaussian(n, 2, rng);
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        Eigen::Index i = pick(rng), j = pick(rng);
        while (j == i) j = pick(rng);
        const double delta = 0.1 + 3 * unit(rng);
        ObservationBatch b;
        b.entries.push_back({std::min(i, j), std::max(i, j), delta, 1.0});
        StepConfig cfg;
        cfg.mu = unit(rng);
        cfg.eps_x = 0.0;
        const Embedding st = stochastic_step(X, b, cfg);
        auto [xi, xj] = spe_step(X.row(i).transpose(), X.row(j).transpose(), delta, cfg.mu / 2.0);
        Embedding expected = X;
        expected.row(i) = xi.transpose();
        expected.row(j) = xj.transpose();
        worst_b = std::max(worst_b, (st - expected).cwiseAbs().maxCoeff());
    }
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::Index n = size(rng);
        ObservationBatch b;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (unit(rng) < 0.5) b.entries.push_back({i, j, 0.2 + 3 * unit(rng), unit(rng)});
        const Embedding X = gaussian(n, 3, rng);
        StepConfig cfg;
        cfg.mu = 0.0;
        worst_c = std::max(worst_c, (stochastic_step(X, b, cfg) - X).cwiseAbs().maxCoeff());
    }
    return {worst_a <= 1e-10 && worst_b <= 1e-10 && worst_c == 0.0,
            fmt("1000 cases each: smacof max diff %.1e, spe max diff %.1e, identity max diff %.1e", worst_a,
                worst_b, worst_c)};
}

Outcome connectivity_bound() {
    Rng rng(3);
    const double eps_w = 1e-3;
    std::uniform_int_distribution<Eigen::Index> size(2, 30);
    std::uniform_real_distribution<double> weight(eps_w, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int violations = 0;
    double tightest = 1e300;
    for (int g = 0; g < 200; ++g) {
        const Eigen::Index p = size(rng);
        ObservationBatch b;
        const double density = g % 3 == 0 ? 0.0 : unit(rng);
        for (Eigen::Index k = 1; k < p; ++k) {
            // Paths for every third graph, random trees otherwise.
            std::uniform_int_distribution<Eigen::Index> parent(0, k - 1);
            b.entries.push_back({g % 3 == 0 ? k - 1 : parent(rng), k, 1.0, weight(rng)});
        }
        std::set<std::pair<Eigen::Index, Eigen::Index>> used;
        for (const auto& o : b.entries) used.insert({std::min(o.m, o.n), std::max(o.m, o.n)});
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i + 1; j < p; ++j)
                if (!used.count({i, j}) && unit(rng) < density) b.entries.push_back({i, j, 1.0, weight(rng)});
        const auto comps = build_laplacian(b, p);
        if (comps.size() != 1) return {false, "generated graph is disconnected"};
        const double a = algebraic_connectivity(comps.front());
        const double bound = 2.0 * eps_w / static_cast<double>((p - 1) * (p - 1));
        tightest = std::min(tightest, a / bound);
        if (a < bound) ++violations;
    }
    return {violations == 0, fmt("200 graphs, %d violations, smallest ratio a(G)/bound %.3g", violations, tightest)};
}

Outcome closed_form_oracle() {
    const auto start = Clock::now();
    const std::size_t draws = 100000;
    const double eps_x = 1e-8;
    int entries = 0, outside = 0, configs = 0;
    double worst_z = 0.0;
    for (Eigen::Index N : {4, 6, 8}) {
        std::set<Eigen::Index> sizes{2, N / 2, N};
        for (Eigen::Index p : sizes) {
            if (p < 2 || N % p) continue;
            ++configs;
            Rng rng = make_rng(static_cast<std::uint64_t>(N * 100 + p), {4});
            const Eigen::MatrixXd truth = gaussian(N, 2, rng) * 3.0;
            const Eigen::MatrixXd D = distance_matrix(truth);
            const Embedding X = centered(gaussian(N, 2, rng));
            Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(N, N);
            Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(N, N);
            for (std::size_t d = 0; d < draws; ++d) {
                const ClusterPartition part = partition_nodes(N, p, rng);
                ObservationBatch b;
                for (const auto& c : part.clusters)
                    for (std::size_t i = 0; i < c.size(); ++i)
                        for (std::size_t j = i + 1; j < c.size(); ++j) b.entries.push_back({c[i], c[j], D(c[i], c[j]), 1.0});
                const auto L = build_laplacian(b, N);
                const auto B = b_epsilon_matrix(X, b, eps_x);
                Eigen::MatrixXd sample = Eigen::MatrixXd::Zero(N, N);
                for (std::size_t k = 0; k < L.size(); ++k) {
                    if (L[k].size() < 2) continue;
                    const Eigen::MatrixXd local = solve_min_norm(L[k], B[k].dense());
                    const auto& ids = L[k].node_ids();
                    for (std::size_t r = 0; r < ids.size(); ++r)
                        for (std::size_t c = 0; c < ids.size(); ++c)
                            sample(ids[r], ids[c]) = local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                }
                sum += sample;
                sq += sample.cwiseProduct(sample);
            }
            const Eigen::MatrixXd mean = sum / static_cast<double>(draws);
            const Eigen::MatrixXd var =
                ((sq / static_cast<double>(draws)) - mean.cwiseProduct(mean)).cwiseMax(0.0) *
                (static_cast<double>(draws) / static_cast<double>(draws - 1));
            const Eigen::MatrixXd closed = closed_form_b_average(X, D, eps_x, N, p);
            for (Eigen::Index r = 0; r < N; ++r) {
                for (Eigen::Index c = 0; c < N; ++c) {
                    ++entries;
                    const double se = std::sqrt(var(r, c) / static_cast<double>(draws));
                    const double diff = std::abs(mean(r, c) - closed(r, c));
                    const double scale = std::max(1.0, std::abs(closed(r, c)));
                    if (se <= 1e-12 * scale) {
                        if (diff > 1e-9 * scale) ++outside;
                        continue;
                    }
                    worst_z = std::max(worst_z, diff / se);
                    if (diff > 3.0 * se) ++outside;
                }
            }
        }
    }
    const double secs = seconds_since(start);
    return {outside == 0 && secs < 120.0,
            fmt("%d configurations, %d entries, %d beyond 3 SE, largest |z| %.2f, %.1f s", configs, entries, outside,
                worst_z, secs)};
}

Outcome hovering() {
    const auto start = Clock::now();
    std::vector<double> medians;
    std::string detail;
    for (double mu : {0.2, 0.1, 0.05}) {
        std::vector<double> devs;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            EuclideanPointProvider prov(square_points(100, s));
            StochasticConfig c = sim_config(s, mu, std::lround(1.0 / mu));
            c.options.keep_snapshots = true;
            c.options.eval_pairs = 0;
            const Embedding init = random_init(100, 2, dissimilarity_magnitude(prov, s), s);
            const auto path = run_stochastic(prov, init, c);
            OracleConfig oc;
            oc.base = c;
            oc.base.sampler.seed = s + 100000;
            oc.averaging_samples = 100;
            const auto avg = run_averaged_oracle(prov, init, oc);
            devs.push_back(hovering_deviation(path.snapshots, avg.snapshots, c.slots));
        }
        medians.push_back(median(devs));
        detail += fmt("mu=%.2f: %.3f  ", mu, medians.back());
    }
    const bool monotone = medians[0] > medians[1] && medians[1] > medians[2];
    const double secs = seconds_since(start);
    return {monotone && secs < 600.0, "median max deviation " + detail + fmt("(%.0f s)", secs)};
}

Outcome steady_state() {
    std::vector<double> medians;
    std::string detail;
    for (double mu : {0.2, 0.1, 0.05, 0.02}) {
        std::vector<double> etas;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            EuclideanPointProvider prov(square_points(100, s));
            StochasticConfig c = sim_config(s, mu, 5000);
            const Embedding init = random_init(100, 2, dissimilarity_magnitude(prov, s), s);
            const auto tr = run_stochastic(prov, init, c);
            etas.push_back(steady_state_stats(tr.records, 4801, 5000).eta_mean);
        }
        medians.push_back(median(etas));
        detail += fmt("mu=%.2f: %.4g  ", mu, medians.back());
    }
    bool monotone = true;
    for (std::size_t k = 1; k < medians.size(); ++k) monotone = monotone && medians[k] < medians[k - 1];
    return {monotone, "median steady-state stress " + detail};
}

Outcome averaged_descent() {
    int violations = 0;
    double worst = 0.0;
    std::string detail;
    for (double mu : {0.5, 0.1}) {
        const Eigen::MatrixXd P = square_points(100, 7);
        EuclideanPointProvider prov(P);
        StochasticConfig c;
        c.sampler.p = 25;
        c.sampler.budget = PairFraction{1.0};
        c.schedule = MuSchedule::constant(mu);
        c.step.mu = mu;
        c.slots = 2000;
        c.options.keep_snapshots = true;
        c.options.eval_pairs = 0;
        OracleConfig oc;
        oc.base = c;
        oc.closed_form = true;
        const auto tr = run_averaged_oracle(prov, random_init(100, 2, 10.0, 7), oc);
        const Eigen::MatrixXd D = distance_matrix(P);
        // Round-off floor of a sum whose terms are of order delta^2.
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * 0.5 * D.squaredNorm();
        double prev = mean_stress(tr.snapshots.front(), D, c.step.eps_x);
        const double first = prev;
        for (std::size_t k = 1; k < tr.snapshots.size(); ++k) {
            const double s = mean_stress(tr.snapshots[k], D, c.step.eps_x);
            worst = std::max(worst, s - prev);
            if (s - prev > 1e-10 * std::abs(prev) + floor) ++violations;
            prev = s;
        }
        detail += fmt("mu=%.1f: %.4g -> %.4g  ", mu, first, prev);
    }
    return {violations == 0, fmt("2000 steps, %d increases beyond tolerance, largest rise %.2e; ", violations, worst) + detail};
}

Outcome exact_recovery() {
    int good = 0;
    const int seeds = 20;
    double worst_rmse = 0.0;
    for (std::uint64_t s = 1; s <= seeds; ++s) {
        Eigen::MatrixXd P = square_points(100, 1000 + s);
        P.row(0) << 0, 0;
        P.row(1) << 10, 0;
        P.row(2) << 10, 10;
        P.row(3) << 0, 10;
        ObservationBatch b;
        for (Eigen::Index m = 0; m < 100; ++m)
            for (Eigen::Index n = m + 1; n < 100; ++n) b.entries.push_back({m, n, (P.row(m) - P.row(n)).norm(), 1.0});
        const auto tr = run_batch_smacof(b, random_init(100, 2, 10.0, s), 1e-12, 20000);
        const std::vector<NodeId> anchors{0, 1, 2, 3};
        const Embedding aligned = anchor_align(tr.final, anchors, P.topRows(4));
        const double rmse = (aligned - P).norm() / std::sqrt(100.0);
        const bool ok = tr.records.back().stress_norm < 1e-6 && rmse < 1e-3;
        if (ok) {
            ++good;
            worst_rmse = std::max(worst_rmse, rmse);
        }
    }
    return {good * 5 >= seeds * 4,
            fmt("%d/%d seeds recovered (stress_norm < 1e-6, RMSE < 1e-3); worst recovered RMSE %.2e", good, seeds,
                worst_rmse)};
}

Outcome localization_tracking() {
    std::vector<double> ours, theirs;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        LocalizeConfig cfg;
        cfg.seed = s;
        cfg.keep_snapshots = true;
        const auto a = run_localization(cfg);
        const auto b = run_smacof_competitor(cfg, 50);
        ours.push_back(localization_error(a.estimates, a.truth, 501, 700));
        theirs.push_back(localization_error(b.estimates, b.truth, 501, 700));
    }
    const double m1 = median(ours), m2 = median(theirs);
    return {m1 <= m2, fmt("median e_loc over [501,700]: stochastic %.4f, batch every 50 rounds %.4f", m1, m2)};
}

Outcome scaling() {
    const Eigen::Index sizes[] = {10000, 20000, 40000};
    std::vector<double> per_slot;
    long long peak_extra = 0;
    const std::int64_t slots = 20;
    for (Eigen::Index n : sizes) {
        const double side = std::sqrt(static_cast<double>(n));
        EuclideanPointProvider prov(square_points(n, 10, side));
        StochasticConfig c;
        c.sampler.p = 100;
        c.sampler.budget = PairCount{50};
        c.sampler.seed = 10;
        c.schedule = MuSchedule::constant(0.1);
        c.slots = slots;
        c.options.eval_pairs = 1000;
        c.options.eval_every = slots;
        const Embedding init = random_init(n, 2, side / 2, 10);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            heap::reset_peak();
            const long long base = heap::live.load();
            const auto start = Clock::now();
            const auto tr = run_stochastic(prov, init, c);
            best = std::min(best, seconds_since(start) / static_cast<double>(slots));
            if (n == sizes[2]) peak_extra = std::max(peak_extra, heap::peak.load() - base);
        }
        per_slot.push_back(best);
    }
    const double r1 = per_slot[1] / per_slot[0];
    const double r2 = per_slot[2] / per_slot[1];
    const double embedding_bytes = static_cast<double>(sizes[2]) * 2 * sizeof(double);
    const double mem_ratio = static_cast<double>(peak_extra) / embedding_bytes;
    return {r1 <= 2.5 && r2 <= 2.5 && mem_ratio < 4.0,
            fmt("ms/slot %.3f, %.3f, %.3f; growth %.2f, %.2f per doubling; peak run heap %.2f x embedding", per_slot[0] * 1e3,
                per_slot[1] * 1e3, per_slot[2] * 1e3, r1, r2, mem_ratio)};
}

Outcome protocol_safety() {
    Rng rng = make_rng(11, {stream::protocol});
    MobilityConfig mob;
    auto state = deploy_network(50, 5, mob, rng);
    ProtocolConfig cfg;
    cfg.timeout_probability = 0.1;
    cfg.noise_sigma = 0.05;
    const long rounds = 100000;
    std::size_t overlaps = 0, leaks = 0, accounting = 0, completed = 0, timed_out = 0, aborted = 0;
    for (long r = 0; r < rounds; ++r) {
        step_mobility(state, mob, rng);
        const RoundLog log = protocol_round(state, rng, cfg);
        std::vector<int> owner(50, 0);
        std::size_t expected = 0;
        for (const auto& e : log.events) {
            switch (e.outcome) {
                case ClusterOutcome::completed: expected += 2 + e.members.size(); break;
                case ClusterOutcome::timed_out:
                case ClusterOutcome::aborted: expected += 1 + e.members.size(); break;
                case ClusterOutcome::lost_contention: break;
            }
            if (e.outcome == ClusterOutcome::completed || e.outcome == ClusterOutcome::timed_out) {
                if (owner[static_cast<std::size_t>(e.head)]++) ++overlaps;
                for (NodeId m : e.members)
                    if (owner[static_cast<std::size_t>(m)]++) ++overlaps;
            }
        }
        if (expected != log.radio_messages || log.charged_messages() != log.radio_messages) ++accounting;
        if (state.locks.held() != 0) ++leaks;
        completed += log.completed;
        timed_out += log.timed_out;
        aborted += log.aborted;
    }
    const std::size_t double_locks = state.locks.double_locks();
    const bool ok = double_locks == 0 && overlaps == 0 && leaks == 0 && accounting == 0 &&
                    state.locks.bad_releases() == 0 && timed_out > 0;
    return {ok, fmt("%ld rounds: %zu completed, %zu timed out, %zu aborted; double locks %zu, overlaps %zu, "
                    "leaked-lock rounds %zu, accounting mismatches %zu",
                    rounds, completed, timed_out, aborted, double_locks, overlaps, leaks, accounting)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("smds_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    struct Job {
        std::string name;
        std::string args;
        bool compare_stdout = true;
    };
    const std::vector<Job> jobs{
        {"embed", "embed --synthetic 80 --p 10 --fraction 0.5 --slots 60 --noise 0.1 --seed 5 --out embed.csv "
                  "--trace embed.jsonl --snapshots embed_snap.csv"},
        {"embed_batch", "embed --mode batch --synthetic 40 --iters 60 --seed 6 --out batch.csv --trace batch.jsonl"},
        {"embed_sgd", "embed --mode sgd --synthetic 60 --p 10 --slots 40 --seed 7 --weights sammon --noise 1 "
                      "--out sgd.csv --trace sgd.jsonl"},
        {"embed_spe", "embed --mode spe --synthetic 40 --slots 80 --seed 8 --out spe.csv --trace spe.jsonl"},
        {"oracle", "oracle --synthetic 80 --p 10 --fraction 0.5 --slots 60 --averaging-samples 8 --seed 5 "
                   "--out oracle.csv --trace oracle.jsonl --snapshots oracle_snap.csv"},
        {"oracle_closed", "oracle --synthetic 60 --p 10 --closed-form --slots 20 --seed 5 --out closed.csv "
                          "--trace closed.jsonl"},
        {"localize", "localize --rounds 150 --seed 3 --noise 0.05 --timeout 0.1 --out loc.json --trace loc.jsonl "
                     "--snapshots loc_snap.csv"},
        {"localize_smacof", "localize --rounds 150 --seed 3 --competitor smacof --out locs.json --trace locs.jsonl"},
        {"stats", "stats --trace embed.jsonl --window 20:60 --hover-a embed_snap.csv --hover-b oracle_snap.csv "
                  "--horizon 20 --out stats.json"},
        {"bench", "bench --sizes 2000,4000 --slots 3 --seed 9 --out bench.csv", false},
    };
    std::vector<std::string> failures;
    std::size_t files = 0;
    for (int threads : {1, 8}) {
        const fs::path d = root / ("t" + std::to_string(threads));
        fs::create_directories(d);
        for (const auto& j : jobs) {
            const std::string cmd = "cd '" + d.string() + "' && '" + SMDS_BINARY + "' " + j.args + " --threads " +
                                    std::to_string(threads) + " > " + j.name + ".stdout 2>/dev/null";
            if (std::system(cmd.c_str()) != 0) failures.push_back(j.name + " exited nonzero");
            if (!j.compare_stdout) fs::remove(d / (j.name + ".stdout"));
        }
    }
    const fs::path a = root / "t1", b = root / "t8";
    for (const auto& entry : fs::directory_iterator(a)) {
        ++files;
        const fs::path other = b / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
            failures.push_back(entry.path().filename().string() + " differs");
    }
    fs::remove_all(root);
    std::string detail = fmt("%zu output files compared across --threads 1 and 8", files);
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"majorization monotonicity", majorization_monotonicity},
        {"update-rule equivalences", equivalence_suite},
        {"algebraic connectivity bound", connectivity_bound},
        {"closed-form averaged matrix vs Monte Carlo", closed_form_oracle},
        {"hovering deviation shrinks with mu", hovering},
        {"steady-state stress shrinks with mu", steady_state},
        {"averaged recursion descends mean stress", averaged_descent},
        {"exact recovery", exact_recovery},
        {"localization tracking vs periodic batch", localization_tracking},
        {"near-linear scaling and bounded memory", scaling},
        {"protocol safety", protocol_safety},
        {"determinism across thread counts", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    ScopedWarningCapture quiet;
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = Clock::now();
        Outcome r;
        try {
            r = criteria[k].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failed;
        std::printf("criterion %2d %s: %s [%s] (%.1f s)\n", id, r.pass ? "PASS" : "FAIL", criteria[k].first,
                    r.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
