// Batch front end: one subcommand per run, artifacts under --out.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cvi/backward.hpp"
#include "cvi/catalog.hpp"
#include "cvi/fd.hpp"
#include "cvi/forward.hpp"
#include "cvi/io.hpp"
#include "cvi/lattice.hpp"
#include "cvi/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_numerical = 2;
constexpr int exit_config = 3;

constexpr double compare_tolerance = 5e-2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::optional<std::string> out;
    bool dump_paths = false;
    bool dump_steps = false;
    bool dump_regression = false;
};

class Artifacts {
  public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) {
            throw cvi::ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
        }
        // Probe, so an unwritable directory fails before any work is done.
        const fs::path probe = dir_ / ".cvi-write-probe";
        {
            std::ofstream f(probe);
            if (!f) {
                throw cvi::ConfigError("output directory is not writable: " + dir_.string());
            }
        }
        fs::remove(probe, ec);
    }

    void json_file(const std::string& name, const json& doc) const {
        write(name, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw cvi::ConfigError("cannot open " + path.string() + " for writing");
        }
        body(out);
        out.flush();
        if (!out) {
            throw cvi::ConfigError("write failed: " + path.string());
        }
        std::cout << "wrote " << path.string() << '\n';
    }

  private:
    fs::path dir_;
};

struct Run {
    cvi::RunConfig config;
    cvi::ProblemSpec spec;
    std::uint64_t seed = 0;
    Artifacts out;
};

Run prepare(const Options& opt) {
    cvi::RunConfig config = cvi::load_run_config(opt.config);
    if (opt.seed) {
        config.seed = opt.seed;
    }
    if (!config.seed) {
        throw cvi::ConfigError("no seed: set 'seed' in the config or pass --seed");
    }
    if (opt.workers < 1) {
        throw cvi::ConfigError("--workers must be at least 1");
    }
    config.outputs.dump_paths |= opt.dump_paths;
    config.outputs.dump_steps |= opt.dump_steps;
    config.outputs.dump_regression |= opt.dump_regression;
    if (opt.out) {
        config.outputs.dir = *opt.out;
    }
    config.scheme.seed = *config.seed;
    config.scheme.workers = opt.workers;
    config.scheme.keep_estimates = config.outputs.dump_steps;
    config.scheme.keep_fits = config.outputs.dump_regression;

    cvi::ProblemSpec spec = cvi::make_catalog_problem(config.problem, config.overrides);
    Artifacts out(config.outputs.dir);
    const std::uint64_t seed = *config.seed;
    return Run{std::move(config), std::move(spec), seed, std::move(out)};
}

cvi::PathBundle simulate(const Run& run) {
    const auto& s = run.config.scheme;
    return cvi::simulate_paths(run.spec, s.paths, s.h, run.seed, s.workers);
}

void dump_paths(const Run& run, const cvi::PathBundle& bundle) {
    run.out.write("paths.csv", [&](std::ostream& o) { cvi::write_paths_csv(o, bundle); });
}

cvi::SolveResult solve(const Run& run) {
    const auto bundle = simulate(run);
    if (run.config.outputs.dump_paths) {
        dump_paths(run, bundle);
    }
    return cvi::solve_backward(run.spec, run.config.scheme, bundle);
}

void dump_solve_csvs(const Run& run, const cvi::SolveResult& result) {
    if (run.config.outputs.dump_steps) {
        run.out.write("steps.csv", [&](std::ostream& o) {
            cvi::write_steps_csv(o, result, run.spec.dim, run.spec.regimes);
        });
    }
    if (run.config.outputs.dump_regression) {
        run.out.write("regression.csv", [&](std::ostream& o) { cvi::write_regression_csv(o, result); });
    }
}

int cmd_simulate(const Run& run) {
    const auto bundle = simulate(run);
    run.out.json_file("simulate.json", cvi::paths_summary_to_json(bundle, run.spec.name, run.seed));
    dump_paths(run, bundle);
    return exit_ok;
}

int cmd_solve(const Run& run) {
    const auto result = solve(run);
    run.out.json_file("result.json", cvi::result_to_json(result));
    dump_solve_csvs(run, result);
    std::cout << "y0 = " << result.y0 << '\n';
    return exit_ok;
}

int cmd_ladder(const Run& run) {
    const auto& schedule = run.config.ladder_schedule;
    cvi::LadderReport report;
    if (run.config.ladder_engine == cvi::LadderEngine::lattice) {
        report = cvi::lattice_ladder(run.spec, run.config.lattice, schedule);
    } else {
        const auto bundle = simulate(run);
        if (run.config.outputs.dump_paths) {
            dump_paths(run, bundle);
        }
        report = cvi::penalization_ladder(run.spec, run.config.scheme, schedule, bundle);
    }
    run.out.json_file("ladder.json", cvi::ladder_to_json(report, run.config.ladder_engine));
    std::cout << "monotone = " << (report.monotone() ? "yes" : "no") << '\n';
    return exit_ok;
}

int cmd_oracle(const Run& run) {
    if (run.config.oracle_engine == cvi::OracleEngine::lattice) {
        const auto sol = cvi::lattice_dp_solve(run.spec, run.config.lattice, run.config.scheme.n);
        json doc = cvi::lattice_to_json(sol);
        doc["problem"] = run.spec.name;
        run.out.json_file("lattice.json", doc);
        std::cout << "y0 = " << sol.y0 << '\n';
        return exit_ok;
    }
    const auto grid = cvi::fd_solve(run.spec, run.config.fd);
    const std::size_t stride = std::max<std::size_t>(1, (grid.times.size() - 1) / 100);
    run.out.write("grid.csv", [&](std::ostream& o) { cvi::write_grid_csv(o, grid, stride); });
    json meta = cvi::grid_to_json(grid, run.config.fd, run.spec);
    meta["csv_time_stride"] = stride;
    run.out.json_file("grid.json", meta);
    return exit_ok;
}

int cmd_compare(const Run& run) {
    const auto result = solve(run);
    const auto grid = cvi::fd_solve(run.spec, run.config.fd);
    const auto report =
        cvi::oracle_compare(result, grid, 0.0, run.spec.initial_regime, run.spec.initial_state.at(0));
    json doc = cvi::compare_to_json(report, run.config.fd);
    doc["problem"] = run.spec.name;
    doc["solver"] = cvi::scheme_to_json(run.config.scheme);
    doc["tolerance"] = compare_tolerance;
    doc["within_tolerance"] = report.abs_gap <= compare_tolerance;
    run.out.json_file("compare.json", doc);
    run.out.json_file("result.json", cvi::result_to_json(result));
    dump_solve_csvs(run, result);
    std::cout << "solver " << report.solver_value << " oracle " << report.oracle_value << " gap " << report.abs_gap
              << '\n';
    return exit_ok;
}

int cmd_validate(const Run& run) {
    const auto report = cvi::validate_problem(run.spec, run.config.validate_samples, run.seed);
    run.out.json_file("validation.json", cvi::validation_to_json(report));
    std::cout << report.warning_count() << " warning(s)\n";
    return exit_ok;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const cvi::ValidationError& e) {
        std::cerr << "validation failure: " << e.what() << '\n';
        return exit_validation;
    } catch (const cvi::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return exit_numerical;
    } catch (const cvi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::length_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalized BSDE solver for coupled variational inequalities"};
    app.require_subcommand(1);

    Options opt;
    using Command = int (*)(const Run&);
    const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
        {"simulate", {"Simulate forward paths (simulate.json, paths.csv)", cmd_simulate}},
        {"solve", {"Run the backward scheme (result.json)", cmd_solve}},
        {"ladder", {"Sweep the penalization level (ladder.json)", cmd_ladder}},
        {"oracle", {"Finite-difference or lattice reference solution", cmd_oracle}},
        {"compare", {"Solver against the finite-difference oracle (compare.json)", cmd_compare}},
        {"validate", {"Spot-check the problem's assumptions (validation.json)", cmd_validate}},
    };
    Command chosen = nullptr;
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", opt.config, "JSON run configuration")->required();
        sub->add_option("--seed", opt.seed, "64-bit seed; overrides the config");
        sub->add_option("--workers", opt.workers, "Worker threads; results do not depend on it");
        sub->add_option("--out", opt.out, "Output directory; overrides the config");
        sub->add_flag("--dump-paths", opt.dump_paths, "Write paths.csv");
        sub->add_flag("--dump-steps", opt.dump_steps, "Write steps.csv");
        sub->add_flag("--dump-regression", opt.dump_regression, "Write regression.csv");
        sub->callback([&chosen, cmd = entry.second] { chosen = cmd; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    return guarded([&] { return chosen(prepare(opt)); });
}
