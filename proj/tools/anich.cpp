// Command-line front end: run, suite, inspect, diff.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anich/anich.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kValidation = 2, kSolver = 3, kAcceptance = 4 };

int cmd_run(const std::string& path, const anich::ScenarioOverrides& ov) {
    anich::ScenarioConfig sc = anich::load_scenario(path);
    anich::apply_overrides(sc, ov);
    const anich::ScenarioOutcome out = anich::run_scenario(sc);
    std::cout << "manifest  " << out.artifacts.manifest.string() << '\n'
              << "series    " << out.artifacts.series.string() << '\n'
              << "snapshots " << out.artifacts.snapshots.size() << '\n';
    if (out.solver_failed) {
        std::cerr << "solver failure: " << out.message << '\n';
        return kSolver;
    }
    const auto& s = out.summary;
    std::cout << "steps " << s.steps << "  t " << anich::format_real(s.final_state.t) << "  max dE "
              << anich::format_real(s.max_energy_increase) << "  mass drift " << anich::format_real(s.max_mass_drift)
              << "  min delta " << anich::format_real(s.min_delta) << '\n';
    return kOk;
}

int cmd_suite(const std::string& name, const anich::SuiteOptions& opt, const std::string& out_dir) {
    const anich::SuiteReport rep = anich::run_suite(name, opt);
    const auto j = rep.to_json();
    std::cout << j.dump(2) << '\n';
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        anich::write_json((std::filesystem::path(out_dir) / ("suite_" + name + ".json")).string(), j);
    }
    return rep.pass() ? kOk : kAcceptance;
}

int cmd_inspect(const std::string& path) {
    const anich::Snapshot s = anich::read_snapshot(path);
    const anich::Grid& g = s.field.grid;
    std::cout << "dim      " << g.dim << '\n' << "cells   ";
    for (int a = 0; a < g.dim; ++a) std::cout << ' ' << g.n[a];
    std::cout << "\nspacing ";
    for (int a = 0; a < g.dim; ++a) std::cout << ' ' << anich::format_real(g.h[a]);
    std::cout << "\nbc       " << anich::boundary_name(g.bc) << '\n'
              << "time     " << anich::format_real(s.time) << '\n'
              << "min      " << anich::format_real(anich::min_value(s.field)) << '\n'
              << "max      " << anich::format_real(anich::max_value(s.field)) << '\n'
              << "mean     " << anich::format_real(anich::mean(s.field)) << '\n'
              << "l2       " << anich::format_real(anich::l2(s.field)) << '\n';
    return kOk;
}

int cmd_diff(const std::string& a, const std::string& b, const std::string& norm) {
    const anich::Snapshot sa = anich::read_snapshot(a);
    const anich::Snapshot sb = anich::read_snapshot(b);
    if (sa.field.grid != sb.field.grid) throw anich::ValidationError("diff", "snapshots live on different grids");
    const anich::Field d = sa.field - sb.field;
    double v = 0.0;
    if (norm == "l2") v = anich::l2(d);
    else if (norm == "linf") v = anich::linf(d);
    else v = anich::hminus_norm(d);
    std::cout << anich::format_real(v) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anisotropic Cahn-Hilliard solver with logarithmic potential"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out_dir;
    int threads = 1;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for random initial data")->capture_default_str();
    app.add_option("--out-dir", out_dir, "Directory for artifacts");
    app.add_option("--threads", threads, "Worker threads across independent scenarios")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::string config;
    auto* run = app.add_subcommand("run", "Run a scenario from an INI config");
    run->add_option("config", config, "Scenario config")->required()->check(CLI::ExistingFile);

    std::string suite;
    auto* suite_cmd = app.add_subcommand("suite", "Run an acceptance bundle");
    suite_cmd->add_option("name", suite, "dissipation | separation | contraction | ladder | elliptic | all")
        ->required()
        ->check(CLI::IsMember(anich::suite_names()));

    std::string snapshot;
    auto* inspect = app.add_subcommand("inspect", "Print a snapshot header and field statistics");
    inspect->add_option("snapshot", snapshot)->required()->check(CLI::ExistingFile);

    std::string snap_a, snap_b, norm = "l2";
    auto* diff = app.add_subcommand("diff", "Norm of the difference of two snapshots");
    diff->add_option("a", snap_a)->required()->check(CLI::ExistingFile);
    diff->add_option("b", snap_b)->required()->check(CLI::ExistingFile);
    diff->add_option("--norm", norm)->check(CLI::IsMember({"l2", "linf", "hminus"}))->capture_default_str();

    // Global flags are also accepted after the verb.
    for (auto* sub : {run, suite_cmd, inspect, diff}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    seed_given = seed_opt->count() > 0;

    try {
        if (*run) {
            anich::ScenarioOverrides ov;
            if (seed_given) ov.seed = seed;
            if (!out_dir.empty()) ov.out_dir = out_dir;
            return cmd_run(config, ov);
        }
        if (*suite_cmd) return cmd_suite(suite, anich::SuiteOptions{seed, threads}, out_dir);
        if (*inspect) return cmd_inspect(snapshot);
        if (*diff) return cmd_diff(snap_a, snap_b, norm);
    } catch (const anich::UsageError& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    } catch (const anich::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::CompatibilityError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::LadderError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::DegenerateError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::IoError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const anich::Error& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
    return kUsage;
}
