#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <cmath>

#include "cli.hpp"
#include "smds/data_io.hpp"
#include "smds/parallel.hpp"
#include "smds/stress.hpp"

namespace smds::cli {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

struct Source {
    std::unique_ptr<DissimilarityProvider> provider;
    std::optional<ObservationBatch> batch;
    std::vector<std::string> ids;
};

Eigen::MatrixXd uniform_points(Eigen::Index n, double side, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::deploy});
    std::uniform_real_distribution<double> u(0.0, side);
    Eigen::MatrixXd P(n, 2);
    for (Eigen::Index r = 0; r < n; ++r) {
        P(r, 0) = u(rng);
        P(r, 1) = u(rng);
    }
    return P;
}

Source open_source(const RunConfig& rc) {
    Source s;
    switch (rc.source) {
        case SourceKind::edges: {
            ObservationBatch batch = load_edge_list(rc.source_path);
            const Eigen::Index n = std::max(rc.nodes, infer_node_count(batch));
            if (n < 2) throw InvalidInput("edge list references fewer than 2 nodes");
            s.provider = std::make_unique<EdgeListProvider>(batch, n);
            s.batch = std::move(batch);
            break;
        }
        case SourceKind::points: {
            auto in = open_in(rc.source_path);
            s.provider = std::make_unique<EuclideanPointProvider>(parse_matrix(in));
            break;
        }
        case SourceKind::fingerprints: {
            auto in = open_in(rc.source_path);
            std::vector<Fingerprint> bits;
            for (auto& rec : parse_fingerprints(in)) {
                s.ids.push_back(rec.id);
                bits.push_back(std::move(rec.bits));
            }
            s.provider = std::make_unique<FingerprintProvider>(std::move(bits));
            break;
        }
        case SourceKind::features: {
            auto in = open_in(rc.source_path);
            s.provider = std::make_unique<CosineProvider>(parse_matrix(in));
            break;
        }
        case SourceKind::dense:
            s.provider = std::make_unique<DenseMatrixProvider>(rc.source_path, rc.nodes, rc.memory_budget);
            break;
        case SourceKind::synthetic:
            s.provider = std::make_unique<EuclideanPointProvider>(uniform_points(rc.nodes, 10.0, rc.seed));
            break;
    }
    if (s.provider->node_count() < 2) throw InvalidInput("input holds fewer than 2 objects");
    return s;
}

ObservationBatch full_batch(const Source& s, const RunConfig& rc) {
    std::vector<Observation> obs;
    if (s.batch) {
        obs = s.batch->entries;
    } else {
        const Eigen::Index n = s.provider->node_count();
        if (n > 5000)
            throw ConfigError("mode", "batch mode needs an edge list or at most 5000 objects");
        for (Eigen::Index m = 0; m < n; ++m)
            for (Eigen::Index k = m + 1; k < n; ++k)
                if (const auto d = s.provider->measure(m, k)) obs.push_back({m, k, d->delta, d->weight});
    }
    ObservationBatch batch;
    batch.entries = assign_weights(obs, rc.run.sampler.scheme, rc.run.step.eps_w);
    return batch;
}

void write_snapshots(const std::string& path, const std::vector<Embedding>& snaps) {
    auto out = open_out(path);
    out << "t,id";
    if (!snaps.empty())
        for (Eigen::Index c = 0; c < snaps.front().cols(); ++c) out << ",c" << c;
    out << '\n';
    for (std::size_t t = 0; t < snaps.size(); ++t) {
        for (Eigen::Index r = 0; r < snaps[t].rows(); ++r) {
            out << t << ',' << r;
            for (Eigen::Index c = 0; c < snaps[t].cols(); ++c) out << ',' << format_double(snaps[t](r, c));
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

std::vector<Embedding> read_snapshots(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(path + ": empty snapshot file");
    const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) - 1;
    if (cols < 1 || line.rfind("t,id", 0) != 0) throw InvalidInput(path + ": bad snapshot header");
    std::vector<std::vector<std::vector<double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            f.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (static_cast<Eigen::Index>(f.size()) != cols + 2)
            throw InvalidInput(path + ": line " + std::to_string(line_no) + " has the wrong field count");
        const auto t = static_cast<std::size_t>(std::stoull(f[0]));
        if (t >= rows.size()) rows.resize(t + 1);
        std::vector<double> row;
        for (std::size_t k = 2; k < f.size(); ++k) row.push_back(parse_double(f[k]));
        rows[t].push_back(std::move(row));
    }
    std::vector<Embedding> out;
    for (const auto& slot : rows) {
        Embedding X(static_cast<Eigen::Index>(slot.size()), cols);
        for (std::size_t r = 0; r < slot.size(); ++r)
            for (Eigen::Index c = 0; c < cols; ++c) X(static_cast<Eigen::Index>(r), c) = slot[r][static_cast<std::size_t>(c)];
        out.push_back(std::move(X));
    }
    return out;
}

std::string json_number(double v) {
    return std::isfinite(v) ? format_double(v) : std::string("null");
}

}  // namespace

int run_embed(const Json& config, bool oracle) {
    const auto& schema = oracle ? oracle_schema() : embed_schema();
    const RunConfig rc = to_run_config(config);
    set_worker_count(rc.threads);
    Source src = open_source(rc);
    const Eigen::Index n = src.provider->node_count();

    Embedding init;
    if (!rc.init_path.empty()) {
        init = load_embedding(rc.init_path).X;
        if (init.rows() != n) throw ConfigError("init", "row count does not match the input");
    } else {
        init = random_init(n, rc.dim, dissimilarity_magnitude(*src.provider, rc.seed), rc.seed);
    }

    RunTrace trace;
    if (oracle) {
        OracleConfig oc;
        oc.base = rc.run;
        oc.averaging_samples = rc.averaging_samples;
        oc.closed_form = rc.closed_form;
        trace = run_averaged_oracle(*src.provider, init, oc);
    } else if (rc.mode == "batch") {
        RunOptions opts = rc.run.options;
        trace = run_batch_smacof(full_batch(src, rc), init, rc.tol, rc.iters, rc.relaxation, opts);
    } else if (rc.mode == "sgd") {
        trace = run_sgd(*src.provider, init, rc.run);
    } else {
        trace = run_stochastic(*src.provider, init, rc.run);
    }
    trace.seed = rc.seed;

    save_embedding(trace.final, rc.out, src.ids.empty() ? nullptr : &src.ids);
    if (!rc.trace.empty()) {
        auto out = open_out(rc.trace);
        write_trace(out, echoed_config(schema, config).dump(), trace.records, to_string(trace.status));
    }
    if (!rc.snapshots.empty()) write_snapshots(rc.snapshots, trace.snapshots);

    if (!trace.records.empty()) {
        const auto& last = trace.records.back();
        std::cout << "status=" << to_string(trace.status) << " t=" << last.t
                  << " stress=" << json_number(last.stress)
                  << " stress_norm=" << json_number(last.stress_norm) << '\n';
    }
    if (trace.status == RunStatus::diverged) {
        std::cerr << "error: iterates diverged at t = " << trace.records.back().t << '\n';
        return numeric;
    }
    return ok;
}

int run_localize(const Json& config) {
    const LocalizeSettings s = to_localize_settings(config);
    set_worker_count(s.threads);
    const LocalizationRun run =
        s.competitor == "smacof" ? run_smacof_competitor(s.sim, s.period) : run_localization(s.sim);
    const double e_loc = localization_error(run.estimates, run.truth, s.window_first, s.window_last);
    const std::size_t mismatch = run.totals.radio_messages > run.totals.charged_messages
                                     ? run.totals.radio_messages - run.totals.charged_messages
                                     : run.totals.charged_messages - run.totals.radio_messages;

    if (!s.trace.empty()) {
        auto out = open_out(s.trace);
        Json header;
        header["config"] = echoed_config(localize_schema(), config);
        out << header.dump() << '\n';
        for (const auto& r : run.records) {
            Json j;
            j["t"] = r.t;
            j["e_loc"] = r.e_loc;
            j["clusters"] = r.clusters;
            j["messages"] = r.messages;
            out << j.dump() << '\n';
        }
        if (!out) throw IoError("write failed for " + s.trace);
    }
    if (!s.snapshots.empty()) {
        auto out = open_out(s.snapshots);
        out << "t,id,x,y,x_hat,y_hat\n";
        for (std::size_t t = 0; t < run.truth.size(); ++t) {
            for (Eigen::Index r = 0; r < run.truth[t].rows(); ++r) {
                out << t << ',' << r << ',' << format_double(run.truth[t](r, 0)) << ','
                    << format_double(run.truth[t](r, 1)) << ',' << format_double(run.estimates[t](r, 0))
                    << ',' << format_double(run.estimates[t](r, 1)) << '\n';
            }
        }
        if (!out) throw IoError("write failed for " + s.snapshots);
    }
    Json summary;
    summary["method"] = s.competitor == "smacof" ? "smacof" : "stochastic";
    summary["window"] = {s.window_first, s.window_last};
    summary["e_loc"] = e_loc;
    summary["rounds"] = run.totals.rounds;
    summary["clusters_completed"] = run.totals.completed;
    summary["clusters_aborted"] = run.totals.aborted;
    summary["clusters_timed_out"] = run.totals.timed_out;
    summary["messages"] = run.totals.radio_messages;
    summary["message_mismatch"] = mismatch;
    summary["double_locks"] = run.totals.double_locks;
    summary["leaked_locks"] = run.totals.leaked_locks;
    if (!s.out.empty()) {
        auto out = open_out(s.out);
        out << summary.dump(2) << '\n';
    }
    std::cout << "e_loc=" << json_number(e_loc) << " window=" << s.window_first << ':' << s.window_last
              << " messages=" << run.totals.radio_messages << '\n';
    return ok;
}

int run_stats(const Json& config) {
    const std::string window = config.at("window").get<std::string>();
    const std::string ha = config.at("hover_a").get<std::string>();
    const std::string hb = config.at("hover_b").get<std::string>();
    if (window.empty() && ha.empty() && hb.empty())
        throw ConfigError("window", "give a window, or hover_a and hover_b");
    Json result = Json::object();
    if (!window.empty()) {
        const std::string path = config.at("trace").get<std::string>();
        if (path.empty()) throw ConfigError("trace", "a trace file is required with --window");
        const auto [first, last] = parse_window("window", window);
        auto in = open_in(path);
        const ParsedTrace trace = read_trace(in);
        const SteadyState ss = steady_state_stats(trace.records, first, last);
        std::cout << "eta_min=" << format_double(ss.eta_min) << " eta_mean=" << format_double(ss.eta_mean)
                  << " eta_max=" << format_double(ss.eta_max) << '\n';
        result["window"] = {first, last};
        result["eta_min"] = ss.eta_min;
        result["eta_mean"] = ss.eta_mean;
        result["eta_max"] = ss.eta_max;
    }
    if (!ha.empty() || !hb.empty()) {
        if (ha.empty() || hb.empty()) throw ConfigError("hover_b", "both hover_a and hover_b are required");
        const auto a = read_snapshots(ha);
        const auto b = read_snapshots(hb);
        long long horizon = config.at("horizon").get<long long>();
        if (horizon < 0) throw ConfigError("horizon", "must be nonnegative");
        if (horizon == 0) horizon = static_cast<long long>(std::min(a.size(), b.size())) - 1;
        const double dev = hovering_deviation(a, b, horizon);
        std::cout << "hovering=" << format_double(dev) << " horizon=" << horizon << '\n';
        result["horizon"] = horizon;
        result["hovering"] = dev;
    }
    const std::string out_path = config.at("out").get<std::string>();
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        out << result.dump(2) << '\n';
    }
    return ok;
}

int run_bench(const Json& config) {
    set_worker_count(static_cast<std::size_t>(config.at("threads").get<long long>()));
    const auto sizes = config.at("sizes").get<std::vector<long long>>();
    const long long p = config.at("p").get<long long>();
    const long long q = config.at("q").get<long long>();
    const long long slots = config.at("slots").get<long long>();
    const long long dim = config.at("dim").get<long long>();
    const double mu = config.at("mu").get<double>();
    const long long eval_pairs = config.at("eval_pairs").get<long long>();
    const long long seed = config.at("seed").get<long long>();
    if (sizes.empty()) throw ConfigError("sizes", "at least one size is required");
    for (long long n : sizes)
        if (n < p) throw ConfigError("sizes", "every size must be at least p");
    if (p < 2) throw ConfigError("p", "must be at least 2");
    if (q < 1 || static_cast<std::size_t>(q) > pair_count(p)) throw ConfigError("q", "must lie in [1, p(p-1)/2]");
    if (slots < 1) throw ConfigError("slots", "must be at least 1");
    if (dim < 1) throw ConfigError("dim", "must be at least 1");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must lie in (0, 1]");
    if (eval_pairs < 0) throw ConfigError("eval_pairs", "must be nonnegative");
    if (seed < 0) throw ConfigError("seed", "must be nonnegative");

    std::ostringstream table;
    table << "N,p,q,slots,pairs_per_slot,lookups_per_slot,final_stress_norm\n";
    std::printf("%10s %6s %6s %14s %16s %12s %10s\n", "N", "p", "q", "pairs/slot", "lookups/slot",
                "ms/slot", "ratio");
    double prev_ms = 0.0;
    Json trace_lines = Json::array();
    for (long long n : sizes) {
        const auto side = std::sqrt(static_cast<double>(n));
        EuclideanPointProvider provider(uniform_points(n, side, static_cast<std::uint64_t>(seed)));
        StochasticConfig cfg;
        cfg.sampler.p = p;
        cfg.sampler.budget = PairCount{static_cast<std::size_t>(q)};
        cfg.sampler.seed = static_cast<std::uint64_t>(seed);
        cfg.step.mu = mu;
        cfg.schedule = MuSchedule::constant(mu);
        cfg.slots = slots;
        cfg.options.eval_pairs = static_cast<std::size_t>(eval_pairs);
        cfg.options.eval_every = slots;
        const Embedding init = random_init(n, dim, side / 2.0, static_cast<std::uint64_t>(seed));
        provider.reset_lookup_count();
        const auto start = std::chrono::steady_clock::now();
        const RunTrace tr = run_stochastic(provider, init, cfg);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() /
                          static_cast<double>(slots);
        const std::uint64_t eval_lookups = std::min<std::uint64_t>(pair_count(n), static_cast<std::uint64_t>(eval_pairs));
        const double lookups = static_cast<double>(provider.lookup_count() - eval_lookups) / static_cast<double>(slots);
        const double pairs = static_cast<double>(tr.records.back().pairs);
        const double final_norm = tr.records.back().stress_norm;
        table << n << ',' << p << ',' << q << ',' << slots << ',' << format_double(pairs) << ','
              << format_double(lookups) << ',' << format_double(final_norm) << '\n';
        std::printf("%10lld %6lld %6lld %14.1f %16.1f %12.3f %10s\n", n, p, q, pairs, lookups, ms,
                    prev_ms > 0.0 ? std::to_string(ms / prev_ms).substr(0, 5).c_str() : "-");
        prev_ms = ms;
        Json line;
        line["N"] = n;
        line["pairs_per_slot"] = pairs;
        line["lookups_per_slot"] = lookups;
        line["final_stress_norm"] = final_norm;
        trace_lines.push_back(line);
    }
    const std::string out_path = config.at("out").get<std::string>();
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        out << table.str();
    }
    const std::string trace_path = config.at("trace").get<std::string>();
    if (!trace_path.empty()) {
        auto out = open_out(trace_path);
        Json header;
        header["config"] = echoed_config(bench_schema(), config);
        out << header.dump() << '\n';
        for (const auto& l : trace_lines) out << l.dump() << '\n';
    }
    return ok;
}

}  // namespace smds::cli
