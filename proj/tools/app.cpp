#include <deque>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "smds/stress.hpp"

namespace smds::cli {

namespace {

struct Bound {
    const Field* field;
    CLI::Option* option;
    std::string text;
    bool flag = false;
};

std::string flag_name(const std::string& key) {
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    return dashed == key ? "--" + key : "--" + dashed + ",--" + key;
}

class Subcommand {
public:
    Subcommand(CLI::App& app, const std::string& name, const std::string& description,
               const std::vector<Field>& schema)
        : schema_(schema) {
        cmd_ = app.add_subcommand(name, description);
        cmd_->add_option("--config", config_path_, "JSON config file");
        for (const auto& f : schema) {
            Bound& b = bound_.emplace_back();
            b.field = &f;
            if (f.kind == FieldKind::boolean) {
                std::string dashed = f.key;
                std::replace(dashed.begin(), dashed.end(), '_', '-');
                b.option = cmd_->add_flag(flag_name(f.key) + ",!--no-" + dashed, b.flag, f.help);
            } else {
                b.option = cmd_->add_option(flag_name(f.key), b.text, f.help);
            }
        }
    }

    bool parsed() const { return cmd_->parsed(); }

    Json load() const {
        Json overrides = Json::object();
        for (const auto& b : bound_) {
            if (b.option->count() == 0) continue;
            overrides[b.field->key] = b.field->kind == FieldKind::boolean
                                          ? Json(b.flag)
                                          : parse_flag_value(*b.field, b.text);
        }
        return load_config(schema_,
                           config_path_.empty() ? std::nullopt : std::optional<std::string>(config_path_),
                           overrides);
    }

private:
    const std::vector<Field>& schema_;
    CLI::App* cmd_ = nullptr;
    std::string config_path_;
    std::deque<Bound> bound_;
};

}  // namespace

int main_entry(int argc, char** argv) {
    CLI::App app{"Stochastic multidimensional scaling engine", "smds"};
    app.require_subcommand(1, 1);
    Subcommand embed(app, "embed", "embed objects from pairwise dissimilarities", embed_schema());
    Subcommand localize(app, "localize", "simulate cooperative localization on a mobile network",
                        localize_schema());
    Subcommand oracle(app, "oracle", "run the averaged companion recursion", oracle_schema());
    Subcommand stats(app, "stats", "steady-state and hovering statistics from stored runs",
                     stats_schema());
    Subcommand bench(app, "bench", "per-slot scaling sweep on synthetic data", bench_schema());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (embed.parsed()) return run_embed(embed.load(), false);
        if (oracle.parsed()) return run_embed(oracle.load(), true);
        if (localize.parsed()) return run_localize(localize.load());
        if (stats.parsed()) return run_stats(stats.load());
        if (bench.parsed()) return run_bench(bench.load());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return config;
    } catch (const SolverError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return numeric;
    } catch (const InconsistentSystem& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numeric;
    }
    std::cerr << app.help();
    return usage;
}

}  // namespace smds::cli
