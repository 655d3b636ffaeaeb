#include "repoabm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "repoabm/io.hpp"

namespace repoabm {

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::string out_dir = "out";
    std::optional<std::size_t> runs;
    std::vector<std::string> sets;
    std::string windows;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_runs) {
    cmd->add_option("--config", a.config_path, "JSON configuration file");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--steps", a.steps, "steps per run");
    cmd->add_option("--out", a.out_dir, "output directory")->capture_default_str();
    if (with_runs) cmd->add_option("--runs", a.runs, "runs per grid point");
    cmd->add_option("--set", a.sets, "override key=value (repeatable, dotted keys)")
        ->allow_extra_args(false);
    cmd->add_option("--windows", a.windows, "aggregation windows, e.g. 1,5,20,50");
}

std::vector<std::size_t> parse_windows(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        unsigned long long w = 0;
        try {
            w = std::stoull(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != item.size() || w == 0)
            throw ConfigError("windows: expected positive integers, got \"" + text + "\"");
        out.push_back(static_cast<std::size_t>(w));
    }
    if (out.empty()) throw ConfigError("windows: must not be empty");
    return out;
}

LoadedConfig resolve(const CommonArgs& a, LoadedConfig base, bool sweep_grid) {
    std::vector<Override> overrides;
    const auto& names = sweepable_parameters();
    for (const auto& text : a.sets) {
        Override o = parse_override(text);
        // a comma list on a numeric parameter defines the sweep grid
        if (sweep_grid && o.value.find(',') != std::string::npos &&
            std::find(names.begin(), names.end(), o.key) != names.end()) {
            overrides.push_back({"sweep.parameter", o.key});
            overrides.push_back({"sweep.values", o.value});
            continue;
        }
        overrides.push_back(std::move(o));
    }
    if (a.seed) overrides.push_back({"seed", std::to_string(*a.seed)});
    if (a.steps) overrides.push_back({sweep_grid ? "sweep.steps" : "steps", std::to_string(*a.steps)});
    if (a.runs) overrides.push_back({"sweep.runs", std::to_string(*a.runs)});
    LoadedConfig loaded = a.config_path.empty() ? parse_config("", base, overrides)
                                                 : load_config(a.config_path, base, overrides);
    if (!a.windows.empty()) {
        // Lip windows not kept by --windows are dropped
        SimConfig& c = loaded.config;
        c.windows = parse_windows(a.windows);
        std::erase_if(c.lip_windows, [&](std::size_t w) {
            return std::find(c.windows.begin(), c.windows.end(), w) == c.windows.end();
        });
        c.validate();
    }
    return loaded;
}

void print_run(std::ostream& out, const RunResult& r, const std::string& dir) {
    out << "status: " << (r.status == RunStatus::Completed ? "completed" : "aborted-loop") << '\n';
    out << "seed: " << r.seed << '\n';
    out << "steps: " << (r.metrics.empty() ? 0 : r.metrics.back().step) << '\n';
    if (r.status == RunStatus::AbortedLoop)
        out << "abort: step " << r.abort_step << ": " << r.abort_reason << '\n';
    for (const auto& [key, value] : stationary_metrics(r))
        out << key << ": " << format_number(value) << '\n';
    out << "output: " << dir << '\n';
}

int run_single(const LoadedConfig& loaded, const std::string& dir, std::ostream& out) {
    const RunResult r = run_simulation(loaded.config, loaded.config.seed);
    write_outputs(r, dir);
    print_run(out, r, dir);
    return r.status == RunStatus::Completed ? kExitOk : kExitAborted;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Agent-based simulation of a secured interbank repo market", "repoabm"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, scenario_args;
    auto* run = app.add_subcommand("run", "single simulation");
    add_common(run, run_args, false);
    auto* sweep = app.add_subcommand("sweep", "parameter grid with repeated runs");
    add_common(sweep, sweep_args, true);
    auto* scenario = app.add_subcommand("scenario", "stress scenario run (APP or GFC)");
    add_common(scenario, scenario_args, false);

    auto* analyze = app.add_subcommand("analyze", "recompute network metrics from a run's edges.csv");
    std::string bundle_dir, analyze_out, analyze_windows;
    analyze->add_option("bundle", bundle_dir, "run output directory")->required();
    analyze->add_option("--out", analyze_out, "output directory (default: the bundle)");
    analyze->add_option("--windows", analyze_windows, "aggregation windows, e.g. 1,5,20,50");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*run) return run_single(resolve(run_args, {}, false), run_args.out_dir, out);

        if (*scenario) {
            LoadedConfig base{scenario_preset(), SweepSpec{}};
            return run_single(resolve(scenario_args, base, false), scenario_args.out_dir, out);
        }

        if (*sweep) {
            LoadedConfig base{sweep_preset(), SweepSpec{}};
            const LoadedConfig loaded = resolve(sweep_args, base, true);
            const auto points = run_sweep(loaded.sweep, loaded.config);
            write_sweep_outputs(points, loaded.sweep, loaded.config, sweep_args.out_dir);
            for (const auto& p : points) {
                out << "[" << loaded.sweep.parameter << " = " << format_number(p.value) << "]\n";
                out << "runs_completed: " << p.runs_completed << '\n';
                out << "runs_aborted: " << p.runs_aborted << '\n';
                for (const auto& [metric, mean] : p.robust_means)
                    out << metric << ": " << format_number(mean) << '\n';
                out << '\n';
            }
            out << "output: " << sweep_args.out_dir << '\n';
            return kExitOk;
        }

        if (*analyze) {
            const BundleInfo info = read_bundle_info(bundle_dir);
            NetworkTrackerConfig tc;
            tc.n = info.config.n_banks;
            tc.windows = info.config.windows;
            tc.lip_windows = info.config.lip_windows;
            if (!analyze_windows.empty()) {
                tc.windows = parse_windows(analyze_windows);
                std::erase_if(tc.lip_windows, [&](std::size_t w) {
                    return std::find(tc.windows.begin(), tc.windows.end(), w) == tc.windows.end();
                });
            }
            tc.lip_null_samples = info.config.lip_null_samples;
            tc.lip_seed = info.seed;
            const auto edges = read_edges(std::filesystem::path(bundle_dir) / "edges.csv");
            const auto rows = analyze_edges(edges, tc, info.steps_completed);
            const std::filesystem::path dir = analyze_out.empty() ? bundle_dir : analyze_out;
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            write_network_csv(rows, dir / "network_analyzed.csv");
            out << "windows: " << rows.size() << '\n';
            out << "output: " << (dir / "network_analyzed.csv").string() << '\n';
            return kExitOk;
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace repoabm
