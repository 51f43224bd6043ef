#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pflab/dynamics.hpp"
#include "pflab/physics.hpp"

namespace pflab {

enum class InitialKind { Constant, Cosine, Random, File };

struct InitialSpec {
    InitialKind kind = InitialKind::Constant;
    double mean = 0.0;
    double amplitude = 0.0;
    int mode = 1;  ///< cosine: cos(mode pi x / Lx)
    std::uint64_t seed = 0;
    std::string file;
};

struct AnalysisSpec {
    std::vector<double> M{0.1, 1.0, 10.0};
    double T = 0.0;
    std::vector<double> delta{0.01};
    double trailing_fraction = 0.5;
    /// De Giorgi window [T - 3 tau, T]; 0 picks T = last snapshot, tau = T / 6.
    double degiorgi_T = 0.0;
    double degiorgi_tau = 0.0;
    int degiorgi_n = 20;
    double loj_window = 0.5;
    double loj_gap_ceiling = 0.0;  ///< 0 = no ceiling
    int omega_reps = 8;
    double omega_tol = 1e-5;
};

struct EquilibriumSpec {
    std::vector<std::string> seeds{"constant", "tanh"};
    std::optional<double> k;  ///< defaults to the initial mean
    double tol = 1e-10;
    int max_iter = 100;
    std::vector<double> tanh_positions{0.5};
    double tanh_width = 0.05;
    double tanh_amplitude = 0.8;
    std::string file;
};

struct ExperimentConfig {
    Grid grid = Grid::line(64, 1.0);
    ModelConfig model;
    InitialSpec initial;
    StepperConfig stepper;
    double t_max = 10.0;
    AnalysisSpec analysis;
    EquilibriumSpec equilibrium;
    std::string output_dir = "runs";
    std::string name = "run";
};

/// Reads a `[section] key = value` file. Unknown sections or keys raise
/// ParseError naming the line; invariant violations raise ValidationError.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// `base_dir` resolves relative file references.
ExperimentConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = ".",
                                     const std::vector<std::string>& overrides = {});

/// Canonical form: every key, sections and keys sorted, full precision.
std::string emit_config(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);

/// phi0 from the initial-data section (mean `initial.mean` except for files).
Field initial_field(const ExperimentConfig& cfg);

/// Counter-based generator: splitmix64 applied to seed + counter * golden gamma.
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter);
/// Uniform in [0, 1) with 53 random bits.
double uniform01(std::uint64_t seed, std::uint64_t counter);

}  // namespace pflab
