#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smds/embedder.hpp"
#include "smds/localization.hpp"

namespace smds::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, usage = 2, config = 3, io = 4, numeric = 5 };

// Bad config value; `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class FieldKind { integer, real, boolean, text, int_list, real_list };

struct Field {
    std::string key;
    FieldKind kind;
    Json fallback;
    std::string help;
    // Runtime-only settings stay out of the echoed config.
    bool echoed = true;
};

const std::vector<Field>& embed_schema();
const std::vector<Field>& oracle_schema();
const std::vector<Field>& localize_schema();
const std::vector<Field>& stats_schema();
const std::vector<Field>& bench_schema();

// Converts a command-line string to the field's JSON type.
Json parse_flag_value(const Field& field, const std::string& text);

// Strict load: unknown keys and wrong types are errors. Values from
// `overrides` win over the file; missing keys take their defaults.
Json load_config(const std::vector<Field>& schema, const std::optional<std::string>& path,
                 const Json& overrides);

// Effective config minus runtime-only keys, for trace headers.
Json echoed_config(const std::vector<Field>& schema, const Json& config);

enum class SourceKind { edges, points, fingerprints, features, dense, synthetic };

struct RunConfig {
    std::string mode = "stochastic";  // batch | stochastic | spe | sgd
    StochasticConfig run;
    Eigen::Index dim = 2;
    std::uint64_t seed = 1;
    SourceKind source = SourceKind::edges;
    std::string source_path;
    Eigen::Index nodes = 0;
    std::size_t memory_budget = std::size_t{64} << 20;
    std::string init_path;
    std::string out;
    std::string trace;
    std::string snapshots;
    int iters = 1000;
    double tol = 1e-6;
    double relaxation = 1.0;
    std::size_t averaging_samples = 100;
    bool closed_form = false;
    std::size_t threads = 1;
};

RunConfig to_run_config(const Json& config);

struct LocalizeSettings {
    LocalizeConfig sim;
    std::string competitor = "none";  // none | smacof
    std::int64_t period = 50;
    std::int64_t window_first = 501;
    std::int64_t window_last = 700;
    std::string out;
    std::string trace;
    std::string snapshots;
    std::size_t threads = 1;
};

LocalizeSettings to_localize_settings(const Json& config);

// "a:b" with a <= b.
std::pair<std::int64_t, std::int64_t> parse_window(const std::string& field, const std::string& text);

int run_embed(const Json& config, bool oracle);
int run_localize(const Json& config);
int run_stats(const Json& config);
int run_bench(const Json& config);

// Full command-line entry point; returns the process exit status.
int main_entry(int argc, char** argv);

}  // namespace smds::cli
