#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "smds/data_io.hpp"

namespace smds::cli {

namespace {

std::vector<Field> common_fields() {
    return {
        {"seed", FieldKind::integer, 1, "root seed for every random stream"},
        {"out", FieldKind::text, "", "primary output file"},
        {"trace", FieldKind::text, "", "JSON-lines trace file"},
        {"threads", FieldKind::integer, 1, "worker thread cap", false},
    };
}

std::vector<Field> run_fields() {
    std::vector<Field> f = common_fields();
    const std::vector<Field> extra = {
        {"mode", FieldKind::text, "stochastic", "batch | stochastic | spe | sgd"},
        {"input", FieldKind::text, "", "edge list m<TAB>n<TAB>delta[<TAB>weight]"},
        {"points", FieldKind::text, "", "point coordinates; Euclidean dissimilarities"},
        {"fingerprints", FieldKind::text, "", "id<TAB>hex fingerprints; Tanimoto dissimilarities"},
        {"features", FieldKind::text, "", "feature rows; cosine dissimilarities"},
        {"dense", FieldKind::text, "", "binary row-major float64 N x N matrix"},
        {"synthetic", FieldKind::integer, 0, "N uniform random points in a 10 x 10 square"},
        {"nodes", FieldKind::integer, 0, "node count (required for dense input)"},
        {"memory_mb", FieldKind::real, 64.0, "cache budget for dense input"},
        {"dim", FieldKind::integer, 2, "embedding dimension P"},
        {"mu", FieldKind::real, 0.1, "step size"},
        {"eps_x", FieldKind::real, 1e-8, "distance regularizer"},
        {"eps_w", FieldKind::real, 1e-3, "smallest nonzero weight"},
        {"p", FieldKind::integer, 25, "cluster size"},
        {"q", FieldKind::integer, 0, "pairs per cluster (0: use fraction)"},
        {"fraction", FieldKind::real, 1.0, "fraction of intra-cluster pairs"},
        {"weights", FieldKind::text, "unity", "unity | sammon | provided"},
        {"require_connected", FieldKind::boolean, false, "resample until clusters connect"},
        {"schedule", FieldKind::text, "constant", "constant | piecewise | reciprocal"},
        {"breakpoints", FieldKind::int_list, Json::array(), "piecewise schedule breakpoints"},
        {"mu_values", FieldKind::real_list, Json::array(), "piecewise schedule values"},
        {"mu_scale", FieldKind::real, 1.0, "c in min(1, c/(1+t))"},
        {"slots", FieldKind::integer, 1000, "time slots"},
        {"iters", FieldKind::integer, 1000, "batch iteration cap"},
        {"tol", FieldKind::real, 1e-6, "batch relative stress tolerance"},
        {"relaxation", FieldKind::real, 1.0, "batch relaxation factor"},
        {"noise", FieldKind::real, 0.0, "measurement noise standard deviation"},
        {"eval_pairs", FieldKind::integer, 100000, "stress evaluation pairs"},
        {"eval_every", FieldKind::integer, 1, "slots between trace records"},
        {"init", FieldKind::text, "", "initial embedding CSV"},
        {"snapshots", FieldKind::text, "", "per-slot embedding CSV"},
        {"timing", FieldKind::boolean, false, "record wall-clock time in the trace", false},
    };
    f.insert(f.end(), extra.begin(), extra.end());
    return f;
}

void need(bool cond, const std::string& field, const std::string& message) {
    if (!cond) throw ConfigError(field, message);
}

bool type_matches(FieldKind kind, const Json& v) {
    switch (kind) {
        case FieldKind::integer: return v.is_number_integer();
        case FieldKind::real: return v.is_number();
        case FieldKind::boolean: return v.is_boolean();
        case FieldKind::text: return v.is_string();
        case FieldKind::int_list:
            if (!v.is_array()) return false;
            for (const auto& e : v)
                if (!e.is_number_integer()) return false;
            return true;
        case FieldKind::real_list:
            if (!v.is_array()) return false;
            for (const auto& e : v)
                if (!e.is_number()) return false;
            return true;
    }
    return false;
}

std::string kind_name(FieldKind kind) {
    switch (kind) {
        case FieldKind::integer: return "an integer";
        case FieldKind::real: return "a number";
        case FieldKind::boolean: return "a boolean";
        case FieldKind::text: return "a string";
        case FieldKind::int_list: return "a list of integers";
        case FieldKind::real_list: return "a list of numbers";
    }
    return "a value";
}

const Field* find_field(const std::vector<Field>& schema, const std::string& key) {
    for (const auto& f : schema)
        if (f.key == key) return &f;
    return nullptr;
}

void merge_checked(const std::vector<Field>& schema, const Json& source, Json& into) {
    if (!source.is_object()) throw ConfigError("config", "top level must be a JSON object");
    for (const auto& [key, value] : source.items()) {
        const Field* f = find_field(schema, key);
        if (!f) throw ConfigError(key, "unknown key");
        if (!type_matches(f->kind, value)) throw ConfigError(key, "expected " + kind_name(f->kind));
        into[key] = value;
    }
}

long long integer(const Json& c, const std::string& key) { return c.at(key).get<long long>(); }
double real(const Json& c, const std::string& key) { return c.at(key).get<double>(); }
std::string text(const Json& c, const std::string& key) { return c.at(key).get<std::string>(); }

void require_file(const std::string& field, const std::string& path) {
    if (!path.empty() && !std::filesystem::exists(path))
        throw IoError(field + ": file not found: " + path);
}

std::size_t thread_count(const Json& c) {
    const long long t = integer(c, "threads");
    need(t >= 1 && t <= 1024, "threads", "must lie in [1, 1024]");
    return static_cast<std::size_t>(t);
}

std::uint64_t seed_of(const Json& c) {
    const long long s = integer(c, "seed");
    need(s >= 0, "seed", "must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

}  // namespace

const std::vector<Field>& embed_schema() {
    static const std::vector<Field> schema = run_fields();
    return schema;
}

const std::vector<Field>& oracle_schema() {
    static const std::vector<Field> schema = [] {
        auto f = run_fields();
        f.push_back({"averaging_samples", FieldKind::integer, 100, "draws averaged per slot"});
        f.push_back({"closed_form", FieldKind::boolean, false, "closed-form expected update"});
        return f;
    }();
    return schema;
}

const std::vector<Field>& localize_schema() {
    static const std::vector<Field> schema = [] {
        auto f = common_fields();
        const std::vector<Field> extra = {
            {"nodes", FieldKind::integer, 50, "network size N"},
            {"anchors", FieldKind::integer, 5, "anchor count"},
            {"alpha", FieldKind::real, 0.9, "velocity memory"},
            {"sigma_v", FieldKind::real, 0.01, "mobility scale"},
            {"noise", FieldKind::real, 0.0, "ranging noise standard deviation"},
            {"mu", FieldKind::real, 0.5, "step size"},
            {"eps_x", FieldKind::real, 1e-8, "distance regularizer"},
            {"eps_w", FieldKind::real, 1e-3, "smallest nonzero weight"},
            {"rounds", FieldKind::integer, 700, "simulated rounds"},
            {"align_every", FieldKind::integer, 10, "rounds between anchor alignments (0: never)"},
            {"timeout", FieldKind::real, 0.0, "per-cluster timeout probability"},
            {"cluster_size", FieldKind::real, 11.0, "target mean cluster size"},
            {"max_members", FieldKind::integer, 10, "nearest neighbors a head accepts"},
            {"min_members", FieldKind::integer, 5, "fewest members for a cluster"},
            {"competitor", FieldKind::text, "none", "none | smacof"},
            {"period", FieldKind::integer, 50, "rounds per SMACOF re-solve"},
            {"window", FieldKind::text, "", "error window a:b (default: last 200 rounds)"},
            {"snapshots", FieldKind::text, "", "per-round positions CSV"},
        };
        f.insert(f.end(), extra.begin(), extra.end());
        return f;
    }();
    return schema;
}

const std::vector<Field>& stats_schema() {
    static const std::vector<Field> schema = [] {
        auto f = common_fields();
        f.push_back({"window", FieldKind::text, "", "slot window a:b for steady-state stress"});
        f.push_back({"hover_a", FieldKind::text, "", "snapshot CSV of the first run"});
        f.push_back({"hover_b", FieldKind::text, "", "snapshot CSV of the second run"});
        f.push_back({"horizon", FieldKind::integer, 0, "hovering horizon in slots"});
        return f;
    }();
    return schema;
}

const std::vector<Field>& bench_schema() {
    static const std::vector<Field> schema = [] {
        auto f = common_fields();
        const std::vector<Field> extra = {
            {"sizes", FieldKind::int_list, Json::array({10000, 20000, 40000}), "node counts"},
            {"p", FieldKind::integer, 100, "cluster size"},
            {"q", FieldKind::integer, 50, "pairs per cluster"},
            {"slots", FieldKind::integer, 20, "timed slots per size"},
            {"dim", FieldKind::integer, 2, "embedding dimension"},
            {"mu", FieldKind::real, 0.1, "step size"},
            {"eval_pairs", FieldKind::integer, 1000, "stress evaluation pairs"},
        };
        f.insert(f.end(), extra.begin(), extra.end());
        return f;
    }();
    return schema;
}

Json parse_flag_value(const Field& field, const std::string& textv) {
    auto split_list = [&](auto convert) {
        Json arr = Json::array();
        std::stringstream ss(textv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            arr.push_back(convert(item));
        }
        return arr;
    };
    auto to_int = [&](const std::string& s) -> long long {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            throw ConfigError(field.key, "expected an integer, got '" + s + "'");
        }
        if (used != s.size()) throw ConfigError(field.key, "expected an integer, got '" + s + "'");
        return v;
    };
    auto to_real = [&](const std::string& s) {
        try {
            return parse_double(s);
        } catch (const InvalidInput&) {
            throw ConfigError(field.key, "expected a number, got '" + s + "'");
        }
    };
    switch (field.kind) {
        case FieldKind::integer: return to_int(textv);
        case FieldKind::real: return to_real(textv);
        case FieldKind::boolean:
            if (textv == "true" || textv == "1") return true;
            if (textv == "false" || textv == "0") return false;
            throw ConfigError(field.key, "expected true or false");
        case FieldKind::text: return textv;
        case FieldKind::int_list: return split_list(to_int);
        case FieldKind::real_list: return split_list(to_real);
    }
    return textv;
}

Json load_config(const std::vector<Field>& schema, const std::optional<std::string>& path,
                 const Json& overrides) {
    Json merged = Json::object();
    if (path && !path->empty()) {
        std::ifstream in(*path);
        if (!in) throw IoError("cannot open config " + *path);
        Json file;
        try {
            file = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ConfigError("config", std::string("invalid JSON: ") + e.what());
        }
        merge_checked(schema, file, merged);
    }
    if (!overrides.is_null()) merge_checked(schema, overrides, merged);
    Json out = Json::object();
    for (const auto& f : schema) out[f.key] = merged.contains(f.key) ? merged[f.key] : f.fallback;
    return out;
}

Json echoed_config(const std::vector<Field>& schema, const Json& config) {
    Json out = Json::object();
    for (const auto& f : schema)
        if (f.echoed && config.contains(f.key)) out[f.key] = config.at(f.key);
    return out;
}

std::pair<std::int64_t, std::int64_t> parse_window(const std::string& field, const std::string& textv) {
    const auto colon = textv.find(':');
    need(colon != std::string::npos, field, "expected a:b");
    try {
        std::size_t u1 = 0;
        std::size_t u2 = 0;
        const std::string a = textv.substr(0, colon);
        const std::string b = textv.substr(colon + 1);
        const long long first = std::stoll(a, &u1);
        const long long last = std::stoll(b, &u2);
        need(u1 == a.size() && u2 == b.size(), field, "expected a:b");
        need(first <= last, field, "window start exceeds its end");
        return {first, last};
    } catch (const std::logic_error&) {
        throw ConfigError(field, "expected a:b with integer bounds");
    }
}

RunConfig to_run_config(const Json& c) {
    RunConfig r;
    r.mode = text(c, "mode");
    static const std::set<std::string> modes = {"batch", "stochastic", "spe", "sgd"};
    need(modes.count(r.mode) > 0, "mode", "must be batch, stochastic, spe or sgd");
    r.seed = seed_of(c);
    r.threads = thread_count(c);

    int sources = 0;
    for (const auto& [key, kind] : {std::pair{"input", SourceKind::edges},
                                    {"points", SourceKind::points},
                                    {"fingerprints", SourceKind::fingerprints},
                                    {"features", SourceKind::features},
                                    {"dense", SourceKind::dense}}) {
        if (!text(c, key).empty()) {
            ++sources;
            r.source = kind;
            r.source_path = text(c, key);
            require_file(key, r.source_path);
        }
    }
    const long long synthetic = integer(c, "synthetic");
    need(synthetic >= 0, "synthetic", "must be nonnegative");
    if (synthetic > 0) {
        ++sources;
        r.source = SourceKind::synthetic;
        r.nodes = synthetic;
    }
    need(sources == 1, "input",
         "exactly one of input, points, fingerprints, features, dense or synthetic is required");
    const long long nodes = integer(c, "nodes");
    need(nodes >= 0, "nodes", "must be nonnegative");
    if (r.source != SourceKind::synthetic) r.nodes = nodes;
    if (r.source == SourceKind::dense) need(nodes >= 2, "nodes", "dense input needs nodes >= 2");
    const double mem = real(c, "memory_mb");
    need(mem > 0.0, "memory_mb", "must be positive");
    r.memory_budget = static_cast<std::size_t>(mem * 1024.0 * 1024.0);

    r.out = text(c, "out");
    need(!r.out.empty(), "out", "an output path is required");
    r.trace = text(c, "trace");
    r.snapshots = text(c, "snapshots");
    r.init_path = text(c, "init");
    require_file("init", r.init_path);

    const long long dim = integer(c, "dim");
    need(dim >= 1 && dim <= 64, "dim", "must lie in [1, 64]");
    r.dim = dim;

    auto& run = r.run;
    run.step.mu = real(c, "mu");
    need(run.step.mu > 0.0 && run.step.mu <= 1.0, "mu", "must lie in (0, 1]");
    run.step.eps_x = real(c, "eps_x");
    need(run.step.eps_x >= 0.0, "eps_x", "must be nonnegative");
    run.step.eps_w = real(c, "eps_w");
    need(run.step.eps_w > 0.0 && run.step.eps_w <= 1.0, "eps_w", "must lie in (0, 1]");

    const long long p = integer(c, "p");
    need(p >= 2, "p", "must be at least 2");
    const long long q = integer(c, "q");
    need(q >= 0, "q", "must be nonnegative");
    const double fraction = real(c, "fraction");
    need(fraction > 0.0 && fraction <= 1.0, "fraction", "must lie in (0, 1]");
    run.sampler.p = p;
    run.sampler.budget = q > 0 ? EdgeBudget{PairCount{static_cast<std::size_t>(q)}}
                               : EdgeBudget{PairFraction{fraction}};
    try {
        run.sampler.scheme = parse_weight_scheme(text(c, "weights"));
    } catch (const InvalidInput& e) {
        throw ConfigError("weights", e.what());
    }
    run.sampler.require_connected = c.at("require_connected").get<bool>();
    run.sampler.seed = r.seed;
    if (r.mode == "spe") {
        run.sampler.p = 2;
        run.sampler.budget = PairCount{1};
    }

    const std::string schedule = text(c, "schedule");
    try {
        if (schedule == "constant") {
            run.schedule = MuSchedule::constant(run.step.mu);
        } else if (schedule == "piecewise") {
            run.schedule = MuSchedule::piecewise(c.at("breakpoints").get<std::vector<std::int64_t>>(),
                                                 c.at("mu_values").get<std::vector<double>>());
        } else if (schedule == "reciprocal") {
            run.schedule = MuSchedule::reciprocal(real(c, "mu_scale"));
        } else {
            throw ConfigError("schedule", "must be constant, piecewise or reciprocal");
        }
    } catch (const InvalidInput& e) {
        throw ConfigError(schedule == "reciprocal" ? "mu_scale" : "mu_values", e.what());
    }

    run.slots = integer(c, "slots");
    need(run.slots >= 0, "slots", "must be nonnegative");
    const long long iters = integer(c, "iters");
    need(iters >= 0 && iters <= 100000000, "iters", "must lie in [0, 1e8]");
    r.iters = static_cast<int>(iters);
    r.tol = real(c, "tol");
    need(r.tol >= 0.0, "tol", "must be nonnegative");
    r.relaxation = real(c, "relaxation");
    need(r.relaxation > 0.0 && r.relaxation <= 1.0, "relaxation", "must lie in (0, 1]");
    run.noise_sigma = real(c, "noise");
    need(run.noise_sigma >= 0.0, "noise", "must be nonnegative");
    const long long eval_pairs = integer(c, "eval_pairs");
    need(eval_pairs >= 0, "eval_pairs", "must be nonnegative");
    run.options.eval_pairs = static_cast<std::size_t>(eval_pairs);
    run.options.eval_every = integer(c, "eval_every");
    need(run.options.eval_every >= 1, "eval_every", "must be at least 1");
    run.options.timing = c.at("timing").get<bool>();
    run.options.keep_snapshots = !r.snapshots.empty();

    if (c.contains("averaging_samples")) {
        const long long k = integer(c, "averaging_samples");
        need(k >= 1, "averaging_samples", "must be at least 1");
        r.averaging_samples = static_cast<std::size_t>(k);
        r.closed_form = c.at("closed_form").get<bool>();
    }
    return r;
}

LocalizeSettings to_localize_settings(const Json& c) {
    LocalizeSettings s;
    auto& sim = s.sim;
    sim.seed = seed_of(c);
    s.threads = thread_count(c);
    sim.nodes = integer(c, "nodes");
    need(sim.nodes >= 2, "nodes", "must be at least 2");
    sim.anchors = integer(c, "anchors");
    need(sim.anchors >= 0 && sim.anchors < sim.nodes, "anchors", "must lie in [0, nodes)");
    sim.mobility.alpha = real(c, "alpha");
    need(sim.mobility.alpha >= 0.0 && sim.mobility.alpha <= 1.0, "alpha", "must lie in [0, 1]");
    sim.mobility.sigma_v = real(c, "sigma_v");
    need(sim.mobility.sigma_v >= 0.0, "sigma_v", "must be nonnegative");
    sim.protocol.noise_sigma = real(c, "noise");
    need(sim.protocol.noise_sigma >= 0.0, "noise", "must be nonnegative");
    sim.protocol.step.mu = real(c, "mu");
    need(sim.protocol.step.mu > 0.0 && sim.protocol.step.mu <= 1.0, "mu", "must lie in (0, 1]");
    sim.protocol.step.eps_x = real(c, "eps_x");
    need(sim.protocol.step.eps_x >= 0.0, "eps_x", "must be nonnegative");
    sim.protocol.step.eps_w = real(c, "eps_w");
    need(sim.protocol.step.eps_w > 0.0 && sim.protocol.step.eps_w <= 1.0, "eps_w", "must lie in (0, 1]");
    sim.rounds = integer(c, "rounds");
    need(sim.rounds >= 1, "rounds", "must be at least 1");
    sim.align_every = integer(c, "align_every");
    need(sim.align_every >= 0, "align_every", "must be nonnegative");
    sim.protocol.timeout_probability = real(c, "timeout");
    need(sim.protocol.timeout_probability >= 0.0 && sim.protocol.timeout_probability <= 1.0, "timeout",
         "must lie in [0, 1]");
    sim.protocol.target_cluster_size = real(c, "cluster_size");
    need(sim.protocol.target_cluster_size >= 1.0, "cluster_size", "must be at least 1");
    const long long max_members = integer(c, "max_members");
    need(max_members >= 1 && max_members < sim.nodes, "max_members", "must lie in [1, nodes)");
    sim.protocol.max_members = static_cast<int>(max_members);
    const long long min_members = integer(c, "min_members");
    need(min_members >= 1 && min_members <= max_members, "min_members", "must lie in [1, max_members]");
    sim.protocol.min_members = static_cast<int>(min_members);
    s.competitor = text(c, "competitor");
    need(s.competitor == "none" || s.competitor == "smacof", "competitor", "must be none or smacof");
    s.period = integer(c, "period");
    need(s.period >= 1, "period", "must be at least 1");
    const std::string window = text(c, "window");
    if (window.empty()) {
        s.window_last = sim.rounds;
        s.window_first = std::max<std::int64_t>(1, sim.rounds - 199);
    } else {
        std::tie(s.window_first, s.window_last) = parse_window("window", window);
        need(s.window_first >= 0 && s.window_last <= sim.rounds, "window", "must lie within [0, rounds]");
    }
    s.out = text(c, "out");
    s.trace = text(c, "trace");
    s.snapshots = text(c, "snapshots");
    sim.keep_snapshots = true;
    return s;
}

}  // namespace smds::cli
