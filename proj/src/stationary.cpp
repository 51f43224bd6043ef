#include "pflab/stationary.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <cmath>

#include "pflab/errors.hpp"
#include "pflab/sparse_ops.hpp"

namespace pflab {

Field stationary_residual(const Model& model, const Field& phi, double mu_c) {
    Field r = chemical_potential(model, phi);
    r += -mu_c;
    return r;
}

namespace {

// Jacobian of (phi, mu_inf) -> [mu(phi) - mu_inf ; mean(phi) - k], with the
// nonlinear-diffusion coefficient frozen at the current iterate.
Eigen::VectorXd newton_direction(const Model& model, const Field& phi, const Eigen::VectorXd& rhs) {
    const ModelConfig& c = model.config();
    const auto n = static_cast<Eigen::Index>(phi.size());
    Eigen::VectorXd diag(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double f2 = eval_potential(c.potential, phi[static_cast<std::size_t>(k)], 2);
        if (!(f2 >= c.potential.theta * (1.0 - 1e-12)))
            throw DomainError(fmt::format("equilibrium: F'' = {} below theta", f2));
        diag[k] = f2 - c.sigma1 * c.potential.theta0;
        if (c.sigma2 == 1 && c.nonlocal_consistency) diag[k] += model.kernel().row_sums()[static_cast<std::size_t>(k)];
    }

    Triplets t;
    for (Eigen::Index k = 0; k < n; ++k) {
        t.emplace_back(k, k, diag[k]);
        t.emplace_back(k, n, -1.0);
        t.emplace_back(n, k, 1.0 / static_cast<double>(n));
    }
    if (c.gamma > 0.0) append_div_grad(diffusion_at_faces(model, phi), -c.gamma, 0, 0, t);
    SparseMatrix jac(n + 1, n + 1);
    jac.setFromTriplets(t.begin(), t.end());

    if (c.sigma2 == 1) {
        Eigen::MatrixXd dense = Eigen::MatrixXd(jac);
        dense.topLeftCorner(n, n) -= model.kernel().matrix();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
        return lu.solve(rhs);
    }
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw NewtonDivergence("equilibrium: singular Jacobian");
    return lu.solve(rhs);
}

}  // namespace

EquilibriumState solve_equilibrium(const Model& model, double k, const Field& guess, const EquilibriumOptions& opts) {
    require_same_grid(model.grid(), guess.grid(), "solve_equilibrium");
    if (!(std::abs(k) < 1.0)) throw ValidationError("equilibrium: |k| must be < 1");
    const double bound = 1.0 - model.config().potential.guard_eps;

    Field phi = guess;
    phi += k - guess.mean();
    if (!(phi.max_abs() < bound))
        throw ValidationError("equilibrium: guess shifted to mean k leaves (-1, 1)");

    const std::size_t n = phi.size();
    const auto ni = static_cast<Eigen::Index>(n);
    Field mu = chemical_potential(model, phi);
    double mu_inf = mu.mean();
    auto residual_of = [&](const Field& p, double m) {
        Field r = stationary_residual(model, p, m);
        return std::pair{r, norm_l2(r)};
    };
    auto [r, res] = residual_of(phi, mu_inf);

    int iters = 0;
    while (res > opts.tol) {
        if (iters >= opts.max_iter)
            throw NewtonDivergence(fmt::format("equilibrium: residual {:.3e} after {} iterations", res, iters));
        Eigen::VectorXd rhs(ni + 1);
        for (Eigen::Index q = 0; q < ni; ++q) rhs[q] = -r[static_cast<std::size_t>(q)];
        rhs[ni] = -(phi.mean() - k);
        const Eigen::VectorXd dx = newton_direction(model, phi, rhs);
        if (!dx.allFinite()) throw NewtonDivergence("equilibrium: non-finite Newton direction");

        double lambda = 1.0;
        auto inside = [&](double l) {
            for (std::size_t q = 0; q < n; ++q)
                if (std::abs(phi[q] + l * dx[static_cast<Eigen::Index>(q)]) > bound) return false;
            return true;
        };
        for (int h = 0; !inside(lambda); ++h) {
            if (h > 60) throw NewtonDivergence("equilibrium: cannot stay inside the guard band");
            lambda *= 0.5;
        }

        auto trial_at = [&](double l) {
            Field p = phi;
            for (std::size_t q = 0; q < n; ++q) p[q] += l * dx[static_cast<Eigen::Index>(q)];
            return std::pair{p, mu_inf + l * dx[ni]};
        };
        auto [p_trial, m_trial] = trial_at(lambda);
        auto [r_trial, res_trial] = residual_of(p_trial, m_trial);
        for (int b = 0; b < opts.max_backtracks && !(res_trial < (1.0 - 1e-4 * lambda) * res); ++b) {
            lambda *= 0.5;
            std::tie(p_trial, m_trial) = trial_at(lambda);
            std::tie(r_trial, res_trial) = residual_of(p_trial, m_trial);
        }
        phi = std::move(p_trial);
        mu_inf = m_trial;
        r = std::move(r_trial);
        res = res_trial;
        ++iters;
        if (!std::isfinite(res)) throw NewtonDivergence("equilibrium: non-finite residual");
    }

    EquilibriumState e;
    e.phi = std::move(phi);
    e.mu_inf = mu_inf;
    e.residual_l2 = res;
    e.delta = 1.0 - e.phi.max_abs();
    e.k = k;
    e.newton_iters = iters;
    e.seed_id = opts.seed_id;
    if (!(e.delta > 0.0)) throw SeparationFailure("equilibrium: converged state touches a pure phase");
    return e;
}

SeparationReport separation_bound(const Model& model, const EquilibriumState& e) {
    SeparationReport rep;
    rep.delta = 1.0 - e.phi.max_abs();
    if (model.config().sigma2 == 1) {
        rep.has_gradient_bound = true;
        rep.grad_l2 = norm_h1_semi(e.phi);
        rep.grad_bound = model.kernel().grad_l1() / model.config().potential.theta;
        rep.gradient_bound_holds = rep.grad_l2 <= rep.grad_bound;
    }
    return rep;
}

double fixed_point_defect(const Model& model, const Field& phi, double dt, const StepperConfig& cfg) {
    State s{phi, 0.0, {}};
    const StepResult r = step(model, s, dt, cfg);
    return (r.state.phi - phi).max_abs();
}

Seed constant_seed(const Grid& grid, double k) { return {fmt::format("constant:{:.6g}", k), Field(grid, k)}; }

Seed tanh_seed(const Grid& grid, const std::vector<double>& positions, double width, double amplitude) {
    if (positions.empty()) throw ValidationError("tanh seed: need at least one layer position");
    if (!(width > 0.0) || !(std::abs(amplitude) < 1.0)) throw ValidationError("tanh seed: bad width or amplitude");
    Field phi(grid);
    for (int j = 0; j < grid.n(1); ++j) {
        for (int i = 0; i < grid.n(0); ++i) {
            const double x = grid.center(0, i);
            // Product of alternating layers: sign flips across each position.
            double v = 1.0;
            for (std::size_t l = 0; l < positions.size(); ++l) {
                const double layer = std::tanh((x - positions[l]) / width);
                v *= (l % 2 == 0) ? -layer : layer;
            }
            phi[grid.index(i, j)] = amplitude * v;
        }
    }
    std::string id = fmt::format("tanh:w={:.4g}:a={:.4g}", width, amplitude);
    for (double p : positions) id += fmt::format(":{:.4g}", p);
    return {id, std::move(phi)};
}

}  // namespace pflab
