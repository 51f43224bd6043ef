#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pflab/config.hpp"
#include "pflab/dynamics.hpp"

namespace pflab {

inline constexpr const char* kRunSchema = "pflab/run/v1";

struct Assertion {
    std::string name;
    bool ok = true;
    std::string detail;
};

struct RunManifest {
    std::string command;
    std::filesystem::path run_dir;
    std::string config_digest;
    std::string started;
    std::string finished;
    std::vector<std::string> files;  ///< relative to run_dir
    std::vector<Assertion> assertions;

    bool ok() const;
};

/// PFLAB_OUTPUT_ROOT when set, else the config's output directory.
std::filesystem::path output_root(const ExperimentConfig& cfg);

/// Runs the dynamics and persists config.ini, diagnostics.csv, snapshots/,
/// summary.json and manifest.json. An existing run directory is an error
/// unless `overwrite` is set.
RunManifest cmd_simulate(const ExperimentConfig& cfg, bool overwrite = false);

/// Solves the stationary problem from every seed of the equilibrium section.
RunManifest cmd_equilibrium(const ExperimentConfig& cfg, bool overwrite = false);

struct AnalyzeOverrides {
    std::vector<double> M;
    std::vector<double> delta;
};

/// Full analysis battery on a simulate output; writes analysis.json,
/// levelset.csv and degiorgi.csv, and extends the manifest.
RunManifest cmd_analyze(const std::filesystem::path& run_dir, const AnalyzeOverrides& ov = {});

/// Fans the config out over `axis` ("section.key=v1,v2,..."), one isolated
/// run directory per value, executed concurrently. Directory collisions are
/// rejected before anything runs.
std::vector<RunManifest> cmd_sweep(const std::filesystem::path& config_path, const std::string& axis,
                                   bool analyze = false);

struct DeGiorgiLemmaArgs {
    double C = 1.0;
    double b = 2.0;
    double eps = 1.0;
    double y0 = 0.0;
    int n = 10;
};

/// JSON text with the threshold and the predicted bounds table. Throws
/// ConditionNotMet when y0 exceeds the threshold.
std::string cmd_lemmas_degiorgi(const DeGiorgiLemmaArgs& a);

/// Trace CSV with columns t,z and an optional mask column; JSON report text.
std::string cmd_lemmas_integrability(const std::filesystem::path& trace, double alpha_tilde, double zeta,
                                     bool* holds = nullptr);

/// Rebuilds a Trajectory from a simulate output directory.
Trajectory load_trajectory(const std::filesystem::path& run_dir, const Model& model);

void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<Sample>& samples);
std::vector<Sample> read_diagnostics_csv(const std::filesystem::path& path);

/// Per-run assertions: mass drift, per-step energy inequality, strict bounds,
/// finiteness and completion.
std::vector<Assertion> check_trajectory(const Trajectory& traj);

}  // namespace pflab
