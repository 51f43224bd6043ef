#pragma once

#include <string>
#include <vector>

#include "pflab/dynamics.hpp"
#include "pflab/physics.hpp"

namespace pflab {

/// A solution of mu(phi_inf) = mu_inf with mean(phi_inf) = k.
struct EquilibriumState {
    Field phi;
    double mu_inf = 0.0;
    double residual_l2 = 0.0;
    double delta = 0.0;  ///< 1 - ||phi_inf||_inf
    double k = 0.0;
    int newton_iters = 0;
    std::string seed_id;
};

struct EquilibriumOptions {
    double tol = 1e-10;
    int max_iter = 100;
    int max_backtracks = 30;
    std::string seed_id = "user";
};

/// chemical_potential(phi) - mu_c; the stationary equation of every preset
/// reads residual = 0 for a constant mu_c.
Field stationary_residual(const Model& model, const Field& phi, double mu_c);

/**
 * Damped Newton on the bordered system
 *   [ mu(phi) - mu_inf = 0 ;  mean(phi) - k = 0 ]
 * in the unknowns (phi, mu_inf). The guess is shifted to mean k first.
 * Throws NewtonDivergence, or SeparationFailure when the converged state
 * touches the pure phases.
 */
EquilibriumState solve_equilibrium(const Model& model, double k, const Field& guess,
                                   const EquilibriumOptions& opts = {});

struct SeparationReport {
    double delta = 0.0;
    /// Nonlocal models only: ||grad phi_inf||_{L^2} against (1/theta) ||grad J||_{L^1}.
    bool has_gradient_bound = false;
    double grad_l2 = 0.0;
    double grad_bound = 0.0;
    bool gradient_bound_holds = true;
};

SeparationReport separation_bound(const Model& model, const EquilibriumState& e);

/// max |step(phi, dt) - phi|: zero for an exact fixed point of the scheme.
double fixed_point_defect(const Model& model, const Field& phi, double dt, const StepperConfig& cfg = {});

struct Seed {
    std::string id;
    Field phi;
};

Seed constant_seed(const Grid& grid, double k);

/// Alternating tanh layers at the given x positions (stripes in 2D).
Seed tanh_seed(const Grid& grid, const std::vector<double>& positions, double width, double amplitude);

}  // namespace pflab
