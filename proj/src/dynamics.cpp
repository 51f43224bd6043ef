#include "pflab/dynamics.hpp"

#include <fmt/format.h>

#include <Eigen/SparseLU>
#include <cmath>

#include "pflab/digest.hpp"
#include "pflab/errors.hpp"
#include "pflab/sparse_ops.hpp"

namespace pflab {

void StepperConfig::validate() const {
    if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
        throw ValidationError("stepper: need 0 < dt_min <= dt_init <= dt_max");
    if (!(newton_tol > 0.0) || newton_max_iter < 1) throw ValidationError("stepper: bad Newton settings");
    if (!(tol_E > 0.0)) throw ValidationError("stepper: tol_E must be positive");
    if (!(growth >= 1.0) || clean_steps_before_growth < 1) throw ValidationError("stepper: bad growth settings");
    if (snapshot_every < 0 || steady_dwell < 0) throw ValidationError("stepper: negative cadence");
}

namespace {

// Residual of the bordered step system and its Jacobian. Unknowns are
// x = [phi+ (n), mu+ (n), lambda], lambda standing for mean(mu+).
class StepSystem {
public:
    StepSystem(const Model& model, const Field& phi_old, double dt)
        : c_(model.config()), phi_old_(phi_old), dt_(dt), n_(phi_old.size()) {
        const Grid& g = phi_old.grid();
        mobility_ = mobility_at_faces(model, phi_old);
        diffusion_ = diffusion_at_faces(model, phi_old);

        // Explicit (concave / nonlocal / a') part of mu+.
        explicit_ = Field(g);
        if (c_.gamma > 0.0 && c_.diffusion.kind != CoefficientKind::Constant) {
            const Field grad_sq = cell_grad_squared(gradient(phi_old));
            for (std::size_t k = 0; k < n_; ++k)
                explicit_[k] += c_.gamma * 0.5 * c_.diffusion.derivative(phi_old[k]) * grad_sq[k];
        }
        if (c_.sigma1 == 1)
            for (std::size_t k = 0; k < n_; ++k) explicit_[k] -= c_.potential.theta0 * phi_old[k];
        implicit_diag_ = Field(g);
        if (c_.sigma2 == 1) {
            const Field conv = model.kernel().apply(phi_old);
            for (std::size_t k = 0; k < n_; ++k) explicit_[k] -= conv[k];
            if (c_.nonlocal_consistency) implicit_diag_ = model.kernel().row_sums();
        }

        lap_m_ = div_grad_matrix(mobility_);
        lap_a_ = div_grad_matrix(diffusion_);
    }

    std::size_t unknowns() const { return 2 * n_ + 1; }
    const FaceField& mobility() const { return mobility_; }

    Field implicit_mu(const Field& phi) const {
        Field g = map_potential(c_.potential, phi, 1);
        Eigen::VectorXd lap = lap_a_ * as_vector(phi);
        for (std::size_t k = 0; k < n_; ++k)
            g[k] += -c_.gamma * lap[static_cast<Eigen::Index>(k)] + implicit_diag_[k] * phi[k] + explicit_[k];
        return g;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
        const auto n = static_cast<Eigen::Index>(n_);
        const Field phi = unpack(x, 0);
        const Field g = implicit_mu(phi);
        Eigen::VectorXd mu = x.segment(n, n);
        const double lambda = x[2 * n];

        Eigen::VectorXd r(2 * n + 1);
        Eigen::VectorXd flux = lap_m_ * mu;
        for (Eigen::Index k = 0; k < n; ++k) {
            r[k] = x[k] - phi_old_[static_cast<std::size_t>(k)] - dt_ * c_.alpha * flux[k] +
                   dt_ * c_.beta * (mu[k] - lambda);
            r[n + k] = mu[k] - g[static_cast<std::size_t>(k)];
        }
        r[2 * n] = lambda - mu.mean();
        return r;
    }

    SparseMatrix jacobian(const Eigen::VectorXd& x) const {
        const auto n = static_cast<Eigen::Index>(n_);
        Triplets t;
        t.reserve(static_cast<std::size_t>(16 * n));
        for (Eigen::Index k = 0; k < n; ++k) {
            t.emplace_back(k, k, 1.0);
            t.emplace_back(k, n + k, dt_ * c_.beta);
            t.emplace_back(k, 2 * n, -dt_ * c_.beta);
            const double f2 = eval_potential(c_.potential, x[k], 2);
            if (!(f2 >= c_.potential.theta * (1.0 - 1e-12)))
                throw DomainError(fmt::format("step: F''({}) = {} below theta", x[k], f2));
            t.emplace_back(n + k, k, -(f2 + implicit_diag_[static_cast<std::size_t>(k)]));
            t.emplace_back(n + k, n + k, 1.0);
            t.emplace_back(2 * n, n + k, -1.0 / static_cast<double>(n));
        }
        t.emplace_back(2 * n, 2 * n, 1.0);
        append_div_grad(mobility_, -dt_ * c_.alpha, 0, n, t);
        append_div_grad(diffusion_, c_.gamma, n, 0, t);
        SparseMatrix j(2 * n + 1, 2 * n + 1);
        j.setFromTriplets(t.begin(), t.end());
        return j;
    }

    double norm(const Eigen::VectorXd& r) const {
        const auto n = static_cast<Eigen::Index>(n_);
        const double vol = phi_old_.grid().cell_volume();
        return std::sqrt(vol * r.head(2 * n).squaredNorm() + phi_old_.grid().volume() * r[2 * n] * r[2 * n]);
    }

    Field unpack(const Eigen::VectorXd& x, Eigen::Index block) const {
        const auto n = static_cast<Eigen::Index>(n_);
        std::vector<double> v(x.data() + block * n, x.data() + (block + 1) * n);
        return Field(phi_old_.grid(), std::move(v));
    }

private:
    const ModelConfig& c_;
    const Field& phi_old_;
    double dt_;
    std::size_t n_;
    FaceField mobility_;
    FaceField diffusion_;
    Field explicit_;
    Field implicit_diag_;
    SparseMatrix lap_m_;
    SparseMatrix lap_a_;
};

}  // namespace

StepResult step(const Model& model, const State& s, double dt, const StepperConfig& cfg) {
    require_same_grid(model.grid(), s.phi.grid(), "step");
    if (!(dt > 0.0)) throw ValidationError("step: dt must be positive");
    const ModelConfig& c = model.config();
    const double bound = 1.0 - c.potential.guard_eps;
    const std::size_t n = s.phi.size();
    const auto ni = static_cast<Eigen::Index>(n);

    StepSystem sys(model, s.phi, dt);
    Eigen::VectorXd x(2 * ni + 1);
    for (Eigen::Index k = 0; k < ni; ++k) x[k] = s.phi[static_cast<std::size_t>(k)];
    const Field mu0 = sys.implicit_mu(s.phi);
    for (Eigen::Index k = 0; k < ni; ++k) x[ni + k] = mu0[static_cast<std::size_t>(k)];
    x[2 * ni] = mu0.mean();

    Eigen::VectorXd r = sys.residual(x);
    double res = sys.norm(r);
    Eigen::SparseLU<SparseMatrix> lu;
    bool analyzed = false;
    int iters = 0;
    int extra = 0;

    // One iteration past the tolerance keeps mu+ accurate when the step
    // itself is tiny (late, near-stationary phases of a run).
    while (res > 1e-3 * cfg.newton_tol) {
        if (res <= cfg.newton_tol && extra++ >= 1) break;
        if (iters >= cfg.newton_max_iter)
            throw NewtonDivergence(fmt::format("step: no convergence after {} iterations (residual {:.3e}, dt {:.3e})",
                                               iters, res, dt));
        const SparseMatrix jac = sys.jacobian(x);
        if (!analyzed) {
            lu.analyzePattern(jac);
            analyzed = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) throw NewtonDivergence("step: singular Newton matrix");
        const Eigen::VectorXd dx = -lu.solve(r);
        if (!dx.allFinite()) throw NewtonDivergence("step: non-finite Newton direction");

        // Stay inside the guard band: the singular F' is the barrier.
        double lambda = 1.0;
        auto inside = [&](double l) {
            for (Eigen::Index k = 0; k < ni; ++k)
                if (std::abs(x[k] + l * dx[k]) > bound) return false;
            return true;
        };
        int halvings = 0;
        while (!inside(lambda)) {
            lambda *= 0.5;
            if (++halvings > 60) throw NewtonDivergence("step: cannot keep iterate inside the guard band");
        }

        Eigen::VectorXd trial = x + lambda * dx;
        Eigen::VectorXd r_trial = sys.residual(trial);
        double res_trial = sys.norm(r_trial);
        for (int b = 0; b < cfg.max_backtracks && !(res_trial < (1.0 - 1e-4 * lambda) * res); ++b) {
            lambda *= 0.5;
            trial = x + lambda * dx;
            r_trial = sys.residual(trial);
            res_trial = sys.norm(r_trial);
        }
        x = std::move(trial);
        r = std::move(r_trial);
        res = res_trial;
        ++iters;
        if (!std::isfinite(res)) throw NewtonDivergence("step: non-finite residual");
    }

    Field phi = sys.unpack(x, 0);
    Field mu = sys.unpack(x, 1);

    // The linear constraint sum(phi+ - phi) = 0 holds up to the roundoff of
    // the LU solve; remove that roundoff from the increment.
    {
        double shift = 0.0;
        for (std::size_t k = 0; k < n; ++k) shift += phi[k] - s.phi[k];
        shift /= static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) phi[k] -= shift;
    }

    if (!phi.all_finite()) throw BoundsViolation("step: non-finite values");
    if (phi.max_abs() >= bound)
        throw BoundsViolation(fmt::format("step: |phi| reached the guard band ({})", phi.max_abs()));

    StepResult out{State{std::move(phi), s.t + dt, {}}, std::move(mu)};
    out.state.last.newton_iters = iters;
    out.state.last.dt = dt;
    out.state.last.energy = energy(model, out.state.phi);
    out.state.last.dissipation = dissipation_rate(model, sys.mobility(), out.mu);
    return out;
}

Sample diagnose(const Model& model, const Field& phi, const Field& mu, double t, double dissipation, double dt,
                int newton_iters) {
    Sample smp;
    smp.t = t;
    smp.mass = phi.mean();
    smp.energy = energy(model, phi);
    smp.dissipation = dissipation;
    smp.grad_mu_l2 = norm_h1_semi(mu);
    Field fluct = mu;
    fluct += -mu.mean();
    smp.mu_fluct_l2 = norm_l2(fluct);
    smp.phi_min = phi.min();
    smp.phi_max = phi.max();
    smp.sep_margin = 1.0 - phi.max_abs();
    smp.dt = dt;
    smp.newton_iters = newton_iters;
    return smp;
}

std::string model_digest(const ModelConfig& m) {
    std::string text = fmt::format(
        "preset={};alpha={:.17g};beta={:.17g};gamma={:.17g};sigma1={};sigma2={};theta={:.17g};theta0={:.17g};"
        "pot={};guard={:.17g};mob={};m_star={:.17g};mavg={};diff={};a_star={:.17g};nlc={}",
        to_string(m.preset), m.alpha, m.beta, m.gamma, m.sigma1, m.sigma2, m.potential.theta, m.potential.theta0,
        m.potential.kind == PotentialKind::Logarithmic ? "log" : "custom", m.potential.guard_eps,
        m.mobility.kind == CoefficientKind::Constant ? "const" : "poly", m.mobility.m_star,
        m.mobility_average == FaceAverage::Arithmetic ? "arith" : "harm",
        m.diffusion.kind == CoefficientKind::Constant ? "const" : "poly", m.diffusion.a_star,
        m.nonlocal_consistency ? 1 : 0);
    for (double c : m.mobility.coeffs) text += fmt::format(";mc={:.17g}", c);
    for (double c : m.diffusion.coeffs) text += fmt::format(";ac={:.17g}", c);
    if (m.kernel)
        text += fmt::format(";kernel={};scale={:.17g};support={:.17g};strength={:.17g}",
                            m.kernel->kind == KernelKind::Gaussian ? "gaussian" : "tophat", m.kernel->scale,
                            m.kernel->support, m.kernel->strength);
    return sha256_hex(text);
}

TrajectoryInfo trajectory_info(const Model& model, const StepperConfig& cfg, std::uint64_t seed) {
    const ModelConfig& c = model.config();
    TrajectoryInfo info;
    info.model_digest = model_digest(c);
    info.preset = to_string(c.preset);
    info.alpha = c.alpha;
    info.beta = c.beta;
    info.m_star = c.mobility.m_star;
    info.energy_floor = model.energy_floor();
    info.gradient_norm = model.uses_gradient_norm();
    info.seed = seed;
    info.tol_E = cfg.tol_E;
    info.steady_threshold = cfg.steady_threshold;
    info.steady_dwell = cfg.steady_dwell;
    return info;
}

Trajectory run(const Model& model, const Field& phi0, double t_max, const StepperConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    require_same_grid(model.grid(), phi0.grid(), "run");
    const ModelConfig& c = model.config();
    if (!phi0.all_finite()) throw ValidationError("run: initial field has non-finite values");
    if (!(phi0.max_abs() < 1.0 - c.potential.guard_eps))
        throw ValidationError("run: initial field must satisfy |phi0| < 1 strictly");
    if (!(std::abs(phi0.mean()) < 1.0)) throw ValidationError("run: initial mean must lie in (-1, 1)");
    if (!(t_max > 0.0)) throw ValidationError("run: t_max must be positive");

    Trajectory traj;
    traj.grid = phi0.grid();
    traj.info = trajectory_info(model, cfg, seed);

    State s{phi0, 0.0, {}};
    const Field mu0 = chemical_potential(model, phi0);
    traj.samples.push_back(diagnose(model, phi0, mu0, 0.0, dissipation_rate(model, phi0, mu0), 0.0, 0));
    traj.snapshots.push_back({0, 0.0, phi0});
    double e_old = traj.samples.back().energy;

    double dt = cfg.dt_init;
    int clean = 0;
    int below = 0;
    std::int64_t steps = 0;
    const double t_eps = 1e-12 * std::max(1.0, t_max);

    while (t_max - s.t > t_eps) {
        const double h = std::min(dt, t_max - s.t);
        std::string reject;
        StepResult res;
        try {
            res = step(model, s, h, cfg);
            if (!(res.state.last.energy + h * res.state.last.dissipation <= e_old + cfg.tol_E)) {
                reject = fmt::format("energy inequality violated by {:.3e}",
                                     res.state.last.energy + h * res.state.last.dissipation - e_old);
                ++traj.counters.rejected_energy;
            }
        } catch (const NewtonDivergence& e) {
            reject = e.what();
            ++traj.counters.rejected_newton;
        } catch (const BoundsViolation& e) {
            reject = e.what();
            ++traj.counters.rejected_bounds;
        } catch (const DomainError& e) {
            reject = e.what();
            ++traj.counters.rejected_bounds;
        }
        if (!reject.empty()) {
            clean = 0;
            dt = 0.5 * h;
            if (dt < cfg.dt_min) {
                traj.complete = false;
                traj.failure = fmt::format("StepFloor at t = {:.6g}: {}", s.t, reject);
                break;
            }
            continue;
        }

        s = std::move(res.state);
        e_old = s.last.energy;
        ++steps;
        ++traj.counters.accepted;
        Sample smp = diagnose(model, s.phi, res.mu, s.t, s.last.dissipation, h, s.last.newton_iters);
        smp.energy = s.last.energy;
        traj.samples.push_back(smp);
        if (cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0) traj.snapshots.push_back({steps, s.t, s.phi});

        if (++clean >= cfg.clean_steps_before_growth) {
            dt = std::min(dt * cfg.growth, cfg.dt_max);
            clean = 0;
        }
        if (cfg.steady_threshold > 0.0) {
            const double norm = traj.info.gradient_norm ? smp.grad_mu_l2 : smp.mu_fluct_l2;
            below = norm < cfg.steady_threshold ? below + 1 : 0;
            if (below >= std::max(1, cfg.steady_dwell)) {
                traj.reached_steady_state = true;
                break;
            }
        }
        if (cfg.max_steps > 0 && steps >= cfg.max_steps) break;
    }
    if (traj.snapshots.back().step != steps) traj.snapshots.push_back({steps, s.t, s.phi});
    return traj;
}

}  // namespace pflab
