#pragma once

// End-to-end scenario execution: resolve the config, write the manifest,
// stream the time series and store snapshots at the configured cadence.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anich/config.hpp"
#include "anich/io.hpp"
#include "anich/stepper.hpp"

namespace anich {

struct ScenarioArtifacts {
    std::filesystem::path dir;
    std::filesystem::path series;
    std::filesystem::path manifest;
    std::vector<std::filesystem::path> snapshots;
};

struct ScenarioOutcome {
    ScenarioArtifacts artifacts;
    RunSummary summary;
    bool solver_failed = false;
    std::string message;
};

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;   // replaces initial.seed
    std::optional<std::string> out_dir;  // replaces output.dir
};

inline void apply_overrides(ScenarioConfig& sc, const ScenarioOverrides& ov) {
    if (ov.seed) sc.initial.random.seed = *ov.seed;
    if (ov.out_dir) sc.output.dir = *ov.out_dir;
}

inline std::string snapshot_name(const std::string& prefix, long step, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06ld.", step);
    return prefix + buf + ext;
}

/// Runs the scenario. Solver failures are reported in the outcome (artifacts written so far are kept);
/// validation and I/O errors propagate.
inline ScenarioOutcome run_scenario(const ScenarioConfig& sc) {
    namespace fs = std::filesystem;
    ScenarioOutcome outc;
    auto& art = outc.artifacts;
    art.dir = fs::path(sc.output.dir);
    fs::create_directories(art.dir);
    art.manifest = art.dir / sc.output.manifest;
    art.series = art.dir / sc.output.series;
    write_json(art.manifest.string(), manifest_json(sc));

    const Grid g = sc.grid.make();
    const Field phi0 = sc.initial.make(g);
    Stepper stepper(sc.potential.spec, sc.anisotropy.spec, sc.mobility.make(), sc.solver);

    SeriesWriter series(art.series.string());
    auto snapshot = [&](const SolverState& s) {
        const fs::path p = art.dir / snapshot_name(sc.output.snapshot_prefix, s.step_index, "bin");
        write_snapshot(p.string(), s.phi, s.t);
        art.snapshots.push_back(p);
        if (sc.output.csv_export && g.dim == 2)
            write_snapshot_csv((art.dir / snapshot_name(sc.output.snapshot_prefix, s.step_index, "csv")).string(),
                               s.phi);
    };
    std::optional<SolverState> last;
    long last_written = -1;

    RunOptions opt;
    opt.horizon = sc.horizon;
    opt.max_steps = sc.max_steps;
    opt.sink = [&](const DiagnosticsRecord& r) { series.write(r); };
    opt.observer = [&](const SolverState& s) {
        const long every = sc.output.snapshot_every;
        if (s.step_index == 0 || (every > 0 && s.step_index % every == 0)) {
            snapshot(s);
            last_written = s.step_index;
        }
        last = s;
    };
    try {
        outc.summary = run(stepper, phi0, opt);
    } catch (const StepFailure& e) {
        outc.solver_failed = true;
        outc.message = e.what();
    } catch (const BoundViolation& e) {
        outc.solver_failed = true;
        outc.message = e.what();
    } catch (const DomainError& e) {
        outc.solver_failed = true;
        outc.message = e.what();
    }
    if (last && last->step_index != last_written) snapshot(*last);
    return outc;
}

} // namespace anich
