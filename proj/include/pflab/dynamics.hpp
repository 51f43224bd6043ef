#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pflab/physics.hpp"

namespace pflab {

struct StepperConfig {
    double dt_init = 1e-3;
    double dt_min = 1e-9;
    double dt_max = 0.1;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    /// Residual-decrease backtracking halvings allowed per Newton iteration.
    int max_backtracks = 12;
    double tol_E = 1e-10;
    double growth = 1.2;
    int clean_steps_before_growth = 5;
    /// Store a snapshot every this many accepted steps (0 disables; the
    /// initial and final states are always stored).
    int snapshot_every = 10;
    /// Stop once the dissipation norm stays below this for `steady_dwell` steps
    /// (<= 0 disables steady-state detection).
    double steady_threshold = 1e-9;
    int steady_dwell = 100;
    /// Hard cap on accepted steps (0 = unlimited).
    std::int64_t max_steps = 0;

    void validate() const;
};

struct StepStats {
    int newton_iters = 0;
    double dt = 0.0;
    double energy = 0.0;
    /// alpha (m(phi_old) grad mu+, grad mu+) + beta |mu+ - mean mu+|^2, the rate
    /// controlled by the one-step energy inequality.
    double dissipation = 0.0;
};

struct State {
    Field phi;
    double t = 0.0;
    StepStats last;
};

struct StepResult {
    State state;
    Field mu;  ///< chemical potential of the implicit solve
};

/**
 * One convex-splitting step of
 *   (phi+ - phi)/dt = alpha div(m(phi) grad mu+) - beta (mu+ - mean mu+),
 *   mu+ = -gamma div(a(phi) grad phi+) + F'(phi+) [+ sigma2 w phi+]
 *         + gamma a'(phi)/2 |grad phi|^2 - sigma1 theta0 phi - sigma2 J*phi,
 * solved by bordered damped Newton in (phi+, mu+, mean mu+).
 *
 * Throws NewtonDivergence or BoundsViolation; the caller retries with a
 * smaller dt.
 */
StepResult step(const Model& model, const State& s, double dt, const StepperConfig& cfg);

struct Sample {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double grad_mu_l2 = 0.0;
    double mu_fluct_l2 = 0.0;
    double phi_min = 0.0;
    double phi_max = 0.0;
    double sep_margin = 0.0;
    double dt = 0.0;
    int newton_iters = 0;
};

struct Snapshot {
    std::int64_t step = 0;
    double t = 0.0;
    Field phi;
};

/// Constants the analyses need from the run that produced a trajectory.
struct TrajectoryInfo {
    std::string model_digest;
    std::string preset;
    double alpha = 0.0;
    double beta = 0.0;
    double m_star = 1.0;
    double energy_floor = 0.0;
    bool gradient_norm = true;  ///< good times via ||grad mu|| (else ||mu - mean mu||)
    std::uint64_t seed = 0;
    double tol_E = 1e-10;
    double steady_threshold = 0.0;
    int steady_dwell = 0;
};

struct RunCounters {
    std::int64_t accepted = 0;
    std::int64_t rejected_newton = 0;
    std::int64_t rejected_bounds = 0;
    std::int64_t rejected_energy = 0;
};

struct Trajectory {
    Grid grid;
    TrajectoryInfo info;
    std::vector<Sample> samples;
    std::vector<Snapshot> snapshots;
    RunCounters counters;
    bool complete = true;
    bool reached_steady_state = false;
    std::string failure;  ///< why the run stopped early, when incomplete

    /// The dissipation norm used for good times, per sample.
    double norm(std::size_t k) const {
        return info.gradient_norm ? samples[k].grad_mu_l2 : samples[k].mu_fluct_l2;
    }
    const Field& last_phi() const { return snapshots.back().phi; }
};

Sample diagnose(const Model& model, const Field& phi, const Field& mu, double t, double dissipation, double dt,
                int newton_iters);

/**
 * Adaptive time integration. Rejected steps (Newton failure, guard hit, or
 * E(phi+) + dt D > E(phi) + tol_E) halve dt; dt grows by `growth` after
 * `clean_steps_before_growth` clean steps. Stops at t_max or at steady state.
 * A StepFloor condition ends the run with `complete = false`.
 */
Trajectory run(const Model& model, const Field& phi0, double t_max, const StepperConfig& cfg,
               std::uint64_t seed = 0);

std::string model_digest(const ModelConfig& m);
TrajectoryInfo trajectory_info(const Model& model, const StepperConfig& cfg, std::uint64_t seed = 0);

}  // namespace pflab
