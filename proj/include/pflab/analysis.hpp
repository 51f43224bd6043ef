#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pflab/dynamics.hpp"
#include "pflab/stationary.hpp"

namespace pflab {

// ---------------------------------------------------------------------------
// Good times

/**
 * A_M(T): sample k (representing the step interval (t_{k-1}, t_k]) is good
 * when its dissipation norm is <= M. The complement measure only counts the
 * part of each interval lying in [T, inf).
 */
struct GoodTimeSet {
    double M = 0.0;
    double T = 0.0;
    bool gradient_norm = true;
    std::vector<bool> mask;  ///< per sample; false for samples before T
    double bad_measure = 0.0;
    double e0 = 0.0;
    /// (E(phi0) - energy_floor) / (alpha m_star M^2), or / (beta M^2) for AC.
    double bound = 0.0;
    /// E(phi0) / (m_star M^2), the bound with the energy taken as nonnegative.
    double literal_bound = 0.0;
    bool ok = true;
};

/// Throws BoundViolation when bad_measure > bound.
GoodTimeSet classify_good_times(const Trajectory& traj, double M, double T = 0.0);

// ---------------------------------------------------------------------------
// Level sets and separation

/// |A_delta| = sum of cell volumes where |phi| >= 1 - delta.
double level_set_measure(const Field& phi, double delta);

struct LevelSetReport {
    double delta = 0.0;
    std::vector<double> t;
    std::vector<double> measure;
    double window_start = 0.0;
    /// Slightly below the smallest distance to +-1 seen in the trailing
    /// window, so that A_{delta_star} is empty there.
    double delta_star = 0.0;
    double T_star = 0.0;
    bool separated = false;
};

/// Trailing window: the last `trailing_fraction` of the recorded time span.
LevelSetReport level_set_series(const Trajectory& traj, double delta, double trailing_fraction = 0.5);

// ---------------------------------------------------------------------------
// De Giorgi iteration

/// theta = C^(-1/eps) b^(-1/eps^2).
double degiorgi_threshold(double C, double b, double eps);
/// theta b^(-n/eps); throws ConditionNotMet when y0 > theta.
double degiorgi_predict(double y0, double C, double b, double eps, int n);

/// k_n = 1 - delta - delta / 2^n for n = 0..n_max.
std::vector<double> degiorgi_levels(double delta, int n_max);
/// t_{-1} = T - 3 tau, t_n = t_{n-1} + tau / 2^n; returns t_{-1}..t_{n_max}.
std::vector<double> degiorgi_times(double T, double tau_tilde, int n_max);

struct DeGiorgiIterates {
    double delta = 0.0;
    double tau_tilde = 0.0;
    double T = 0.0;
    int sign = 1;
    std::vector<double> k;  ///< k_0..k_{n_max}
    std::vector<double> t;  ///< t_{-1}..t_{n_max}
    std::vector<double> y;  ///< y_0..y_{n_max}
    bool decays_to_zero = false;  ///< y_{n_max} == 0
};

/**
 * y_n = int_{t_{n-1}}^T |{x : sign phi(x, s) >= k_n}| ds, with the snapshot at
 * time s_j held over (s_{j-1}, s_j].
 */
DeGiorgiIterates degiorgi_from_trajectory(const Trajectory& traj, double delta, double tau_tilde, double T,
                                          int n_max, int sign = 1);

// ---------------------------------------------------------------------------
// Integrability lemma

struct IntegrabilityReport {
    std::vector<double> t;
    std::vector<double> z;
    double alpha_tilde = 0.0;
    double zeta = 0.0;
    double Y = 0.0;  ///< int Z^2 over the recorded window
    bool hypothesis_holds = false;
    std::optional<double> first_violation;  ///< time of the first failing sample
    std::optional<double> integral;         ///< int_M Z, only when the hypothesis holds
};

/**
 * Checks (int_s^inf Z^2)^alpha <= zeta Z(s)^2 at every masked sample, the
 * tail taken by trapezoid quadrature over the recorded window, with relative
 * slack `rtol` for quadrature error.
 */
IntegrabilityReport integrability_check(const std::vector<double>& t, const std::vector<double>& z,
                                        double alpha_tilde, double zeta, const std::vector<bool>& mask,
                                        double rtol = 1e-6);

// ---------------------------------------------------------------------------
// Lojasiewicz fit

struct LojasiewiczOptions {
    std::optional<double> E_inf;     ///< default: mean energy over the trailing 5% of samples
    double window_fraction = 0.5;    ///< trailing share of the resolvable decay (gap above floor, below ceiling)
    std::optional<double> gap_floor; ///< default: 1e3 eps max(1, |E_inf|)
    /// Only fit samples with gap <= ceiling (the near-equilibrium regime).
    std::optional<double> gap_ceiling;
};

struct LojasiewiczFit {
    double theta = 0.0;
    double C = 0.0;
    double slope = 0.0;     ///< d log(gap) / d log(norm) = 1 / (1 - theta)
    double fit_r2 = 0.0;
    double semilog_r2 = 0.0;  ///< r^2 of log(gap) against t
    double decay_rate = 0.0;  ///< -d log(gap) / dt
    double E_inf = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    std::vector<std::size_t> used;
    bool clipped = false;
};

/// Throws DegenerateWindow with fewer than 10 usable samples.
LojasiewiczFit lojasiewicz_fit(const Trajectory& traj, const GoodTimeSet& gts, const LojasiewiczOptions& opts = {});

// ---------------------------------------------------------------------------
// Omega-limit

struct OmegaLimitOptions {
    int n_reps = 8;
    double tol = 1e-5;
    double trailing_fraction = 0.5;
    /// Seed a stationary solve from the last representative.
    bool polish = true;
    double polish_tol = 1e-10;
};

struct OmegaLimitEstimate {
    std::vector<double> rep_times;
    std::vector<std::vector<double>> dist_l2;
    std::vector<std::vector<double>> dist_hminus1;
    double dispersion = 0.0;  ///< max pairwise L^2 distance
    double dispersion_hminus1 = 0.0;
    bool singleton = false;
    std::optional<EquilibriumState> nearest;
    double nearest_distance = 0.0;
    std::string polish_error;
};

/**
 * Representatives are the snapshots nearest to geometrically spaced times
 * over the trailing window (good times only when `gts` is given). `model` is
 * needed for the equilibrium polish; pass nullptr to skip it.
 */
OmegaLimitEstimate omega_limit_estimate(const Trajectory& traj, const GoodTimeSet* gts, const Model* model,
                                        const OmegaLimitOptions& opts = {});

}  // namespace pflab
