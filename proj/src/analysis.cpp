#include "pflab/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pflab/errors.hpp"

namespace pflab {

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

// Portion of the step interval (t_{k-1}, t_k] lying in [lo, hi].
double overlap(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

std::size_t nearest_sample(const Trajectory& traj, double t) {
    const auto& s = traj.samples;
    auto it = std::lower_bound(s.begin(), s.end(), t, [](const Sample& a, double v) { return a.t < v; });
    if (it == s.end()) return s.size() - 1;
    const auto k = static_cast<std::size_t>(it - s.begin());
    if (k > 0 && std::abs(s[k - 1].t - t) < std::abs(s[k].t - t)) return k - 1;
    return k;
}

}  // namespace

// ---------------------------------------------------------------------------

GoodTimeSet classify_good_times(const Trajectory& traj, double M, double T) {
    if (!(M > 0.0)) throw ValidationError("good times: M must be > 0");
    if (!(T >= 0.0)) throw ValidationError("good times: T must be >= 0");
    if (traj.samples.empty()) throw InsufficientSnapshots("good times: trajectory has no samples");

    const TrajectoryInfo& info = traj.info;
    GoodTimeSet g;
    g.M = M;
    g.T = T;
    g.gradient_norm = info.gradient_norm;
    g.mask.assign(traj.samples.size(), false);
    g.e0 = traj.samples.front().energy;

    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const double tk = traj.samples[k].t;
        if (tk < T) continue;
        const bool good = traj.norm(k) <= M;
        g.mask[k] = good;
        if (!good && k > 0) g.bad_measure += overlap(traj.samples[k - 1].t, tk, T, tk);
    }

    const double rate = info.gradient_norm ? info.alpha * info.m_star : info.beta;
    if (!(rate > 0.0)) throw ValidationError("good times: dissipation rate constant must be > 0");
    g.bound = (g.e0 - std::min(0.0, info.energy_floor)) / (rate * M * M);
    g.literal_bound = g.e0 / ((info.gradient_norm ? info.m_star : 1.0) * M * M);
    g.ok = g.bad_measure <= g.bound;
    if (!g.ok)
        throw BoundViolation(fmt::format("good times: bad-set measure {:.6e} exceeds bound {:.6e} at M = {}",
                                         g.bad_measure, g.bound, M));
    return g;
}

// ---------------------------------------------------------------------------

double level_set_measure(const Field& phi, double delta) {
    double count = 0.0;
    for (double v : phi.values())
        if (std::abs(v) >= 1.0 - delta) count += 1.0;
    return count * phi.grid().cell_volume();
}

LevelSetReport level_set_series(const Trajectory& traj, double delta, double trailing_fraction) {
    if (traj.snapshots.size() < 2) throw InsufficientSnapshots("level sets: need at least two snapshots");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("level sets: delta must lie in (0, 1)");
    if (!(trailing_fraction > 0.0 && trailing_fraction <= 1.0))
        throw ValidationError("level sets: trailing fraction must lie in (0, 1]");

    LevelSetReport rep;
    rep.delta = delta;
    for (const Snapshot& s : traj.snapshots) {
        rep.t.push_back(s.t);
        rep.measure.push_back(level_set_measure(s.phi, delta));
    }

    // Margins from the per-step diagnostics when present, else from snapshots.
    std::vector<std::pair<double, double>> margins;
    if (!traj.samples.empty()) {
        for (const Sample& s : traj.samples) margins.emplace_back(s.t, s.sep_margin);
    } else {
        for (const Snapshot& s : traj.snapshots) margins.emplace_back(s.t, 1.0 - s.phi.max_abs());
    }
    const double t0 = margins.front().first;
    const double t1 = margins.back().first;
    rep.window_start = t1 - trailing_fraction * (t1 - t0);

    double min_margin = std::numeric_limits<double>::infinity();
    for (const auto& [t, m] : margins)
        if (t >= rep.window_start) min_margin = std::min(min_margin, m);
    rep.delta_star = std::max(0.0, min_margin * (1.0 - 1e-6));
    rep.separated = rep.delta_star > 0.0;

    rep.T_star = t1;
    for (auto it = margins.rbegin(); it != margins.rend() && it->second > rep.delta_star; ++it) rep.T_star = it->first;
    return rep;
}

// ---------------------------------------------------------------------------

double degiorgi_threshold(double C, double b, double eps) {
    if (!(C > 0.0) || !(b > 1.0) || !(eps > 0.0)) throw ValidationError("De Giorgi: need C > 0, b > 1, eps > 0");
    return std::pow(C, -1.0 / eps) * std::pow(b, -1.0 / (eps * eps));
}

double degiorgi_predict(double y0, double C, double b, double eps, int n) {
    const double theta = degiorgi_threshold(C, b, eps);
    if (n < 0) throw ValidationError("De Giorgi: n must be >= 0");
    if (y0 > theta) throw ConditionNotMet(fmt::format("De Giorgi: y0 = {} exceeds threshold {}", y0, theta));
    return theta * std::pow(b, -static_cast<double>(n) / eps);
}

std::vector<double> degiorgi_levels(double delta, int n_max) {
    std::vector<double> k;
    for (int n = 0; n <= n_max; ++n) k.push_back(1.0 - delta - std::ldexp(delta, -n));
    return k;
}

std::vector<double> degiorgi_times(double T, double tau_tilde, int n_max) {
    std::vector<double> t{T - 3.0 * tau_tilde};
    for (int n = 0; n <= n_max; ++n) t.push_back(t.back() + std::ldexp(tau_tilde, -n));
    return t;
}

DeGiorgiIterates degiorgi_from_trajectory(const Trajectory& traj, double delta, double tau_tilde, double T,
                                          int n_max, int sign) {
    if (!(delta > 0.0 && delta < 0.5)) throw ValidationError("De Giorgi: delta must lie in (0, 1/2)");
    if (!(tau_tilde > 0.0)) throw ValidationError("De Giorgi: tau must be > 0");
    if (n_max < 0) throw ValidationError("De Giorgi: n_max must be >= 0");
    if (sign != 1 && sign != -1) throw ValidationError("De Giorgi: sign must be +1 or -1");
    if (traj.snapshots.empty()) throw InsufficientSnapshots("De Giorgi: no snapshots");

    const double lo = T - 3.0 * tau_tilde;
    const double first = traj.snapshots.front().t;
    const double last = traj.snapshots.back().t;
    if (lo < 0.0 || lo < first || T > last)
        throw WindowOutOfRange(
            fmt::format("De Giorgi: window [{}, {}] not inside recorded [{}, {}]", lo, T, first, last));

    std::size_t inside = 0;
    for (const Snapshot& s : traj.snapshots)
        if (s.t >= lo && s.t <= T) ++inside;
    if (inside < 2) throw InsufficientSnapshots("De Giorgi: fewer than two snapshots in [T - 3 tau, T]");

    DeGiorgiIterates it;
    it.delta = delta;
    it.tau_tilde = tau_tilde;
    it.T = T;
    it.sign = sign;
    it.k = degiorgi_levels(delta, n_max);
    it.t = degiorgi_times(T, tau_tilde, n_max);

    const double vol = traj.grid.cell_volume();
    for (int n = 0; n <= n_max; ++n) {
        const double kn = it.k[static_cast<std::size_t>(n)];
        const double start = it.t[static_cast<std::size_t>(n)];  // t_{n-1}
        double y = 0.0;
        for (std::size_t j = 1; j < traj.snapshots.size(); ++j) {
            const double w = overlap(traj.snapshots[j - 1].t, traj.snapshots[j].t, start, T);
            if (w <= 0.0) continue;
            double count = 0.0;
            for (double v : traj.snapshots[j].phi.values())
                if (sign * v >= kn) count += 1.0;
            y += count * vol * w;
        }
        it.y.push_back(y);
    }
    it.decays_to_zero = it.y.back() == 0.0;
    return it;
}

// ---------------------------------------------------------------------------

IntegrabilityReport integrability_check(const std::vector<double>& t, const std::vector<double>& z,
                                        double alpha_tilde, double zeta, const std::vector<bool>& mask,
                                        double rtol) {
    if (t.size() != z.size() || t.size() != mask.size())
        throw ShapeMismatch("integrability: t, Z and mask lengths differ");
    if (t.size() < 2) throw InsufficientSnapshots("integrability: need at least two samples");
    if (!(alpha_tilde > 1.0 && alpha_tilde < 2.0)) throw ValidationError("integrability: alpha must lie in (1, 2)");
    if (!(zeta > 0.0)) throw ValidationError("integrability: zeta must be > 0");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (z[i] < 0.0 || !std::isfinite(z[i])) throw DomainError("integrability: Z must be finite and >= 0");
        if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("integrability: times must increase");
    }

    IntegrabilityReport rep;
    rep.t = t;
    rep.z = z;
    rep.alpha_tilde = alpha_tilde;
    rep.zeta = zeta;

    const std::size_t n = t.size();
    std::vector<double> tail(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;)
        tail[i] = tail[i + 1] + 0.5 * (z[i] * z[i] + z[i + 1] * z[i + 1]) * (t[i + 1] - t[i]);
    rep.Y = tail[0];

    rep.hypothesis_holds = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const double lhs = std::pow(tail[i], alpha_tilde);
        const double rhs = zeta * z[i] * z[i];
        if (lhs > rhs * (1.0 + rtol)) {
            rep.hypothesis_holds = false;
            rep.first_violation = t[i];
            break;
        }
    }
    if (rep.hypothesis_holds) {
        double integral = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (mask[i] && mask[i + 1]) integral += 0.5 * (z[i] + z[i + 1]) * (t[i + 1] - t[i]);
        rep.integral = integral;
    }
    return rep;
}

// ---------------------------------------------------------------------------

LojasiewiczFit lojasiewicz_fit(const Trajectory& traj, const GoodTimeSet& gts, const LojasiewiczOptions& opts) {
    const auto& s = traj.samples;
    if (s.size() < 10) throw DegenerateWindow("Lojasiewicz: fewer than 10 samples");
    if (gts.mask.size() != s.size()) throw ShapeMismatch("Lojasiewicz: good-time mask does not match samples");
    if (!(opts.window_fraction > 0.0 && opts.window_fraction <= 1.0))
        throw ValidationError("Lojasiewicz: window fraction must lie in (0, 1]");

    LojasiewiczFit fit;
    if (opts.E_inf) {
        fit.E_inf = *opts.E_inf;
    } else {
        const std::size_t tail = std::max<std::size_t>(1, s.size() / 20);
        double acc = 0.0;
        for (std::size_t k = s.size() - tail; k < s.size(); ++k) acc += s[k].energy;
        fit.E_inf = acc / static_cast<double>(tail);
    }
    const double floor =
        opts.gap_floor ? *opts.gap_floor : 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fit.E_inf));

    // window over the resolvable part of the decay: gap above the floor, below the ceiling
    double t0 = INFINITY, t1 = -INFINITY;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double gap = s[k].energy - fit.E_inf;
        if (!(gap > floor) || (opts.gap_ceiling && gap > *opts.gap_ceiling)) continue;
        t0 = std::min(t0, s[k].t);
        t1 = std::max(t1, s[k].t);
    }
    if (!(t1 > t0)) throw DegenerateWindow("Lojasiewicz: energy gap never resolvable above the floor");
    fit.window_start = t1 - opts.window_fraction * (t1 - t0);
    fit.window_end = t1;

    std::vector<double> lx, ly, tt;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].t < fit.window_start || !gts.mask[k]) continue;
        const double gap = s[k].energy - fit.E_inf;
        const double nrm = traj.norm(k);
        if (!(gap > floor) || !(nrm > 0.0)) continue;
        if (opts.gap_ceiling && gap > *opts.gap_ceiling) continue;
        fit.used.push_back(k);
        lx.push_back(std::log(nrm));
        ly.push_back(std::log(gap));
        tt.push_back(s[k].t);
    }
    if (fit.used.size() < 10)
        throw DegenerateWindow(fmt::format("Lojasiewicz: only {} usable samples in the window", fit.used.size()));

    const LineFit ll = least_squares(lx, ly);
    fit.slope = ll.slope;
    fit.fit_r2 = ll.r2;
    const LineFit sl = least_squares(tt, ly);
    fit.semilog_r2 = sl.r2;
    fit.decay_rate = -sl.slope;

    double theta = ll.slope > 0.0 ? 1.0 - 1.0 / ll.slope : 0.0;
    const double lo = 1e-6;
    if (theta < lo || theta > 0.5) {
        fit.clipped = true;
        theta = std::clamp(theta, lo, 0.5);
    }
    fit.theta = theta;
    for (std::size_t i = 0; i < lx.size(); ++i)
        fit.C = std::max(fit.C, std::exp((1.0 - theta) * ly[i] - lx[i]));
    return fit;
}

// ---------------------------------------------------------------------------

OmegaLimitEstimate omega_limit_estimate(const Trajectory& traj, const GoodTimeSet* gts, const Model* model,
                                        const OmegaLimitOptions& opts) {
    if (opts.n_reps < 2) throw ValidationError("omega-limit: need at least two representatives");
    if (traj.snapshots.empty()) throw InsufficientSnapshots("omega-limit: no snapshots");
    if (gts && gts->mask.size() != traj.samples.size())
        throw ShapeMismatch("omega-limit: good-time mask does not match samples");

    const double t0 = traj.snapshots.front().t;
    const double t1 = traj.snapshots.back().t;
    const double start = t1 - opts.trailing_fraction * (t1 - t0);

    std::vector<std::size_t> pool;
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        const Snapshot& sn = traj.snapshots[j];
        if (sn.t < start) continue;
        if (gts && !gts->mask[nearest_sample(traj, sn.t)]) continue;
        pool.push_back(j);
    }
    if (pool.size() < static_cast<std::size_t>(opts.n_reps))
        throw InsufficientSnapshots(
            fmt::format("omega-limit: {} eligible snapshots, need {}", pool.size(), opts.n_reps));

    // Geometric targets from the window start (shifted to be positive) to the end.
    std::vector<std::size_t> reps;
    const double shift = start > 0.0 ? 0.0 : (t1 - start) * 1e-3 - start;
    const double a = start + shift;
    const double b = t1 + shift;
    const double ratio = std::pow(b / a, 1.0 / (opts.n_reps - 1));
    for (int i = 0; i < opts.n_reps; ++i) {
        const double target = a * std::pow(ratio, i) - shift;
        std::size_t best = pool.front();
        for (std::size_t j : pool)
            if (std::abs(traj.snapshots[j].t - target) < std::abs(traj.snapshots[best].t - target)) best = j;
        if (std::find(reps.begin(), reps.end(), best) == reps.end()) reps.push_back(best);
    }
    // Fill up from the latest unused snapshots when targets collide.
    for (auto it = pool.rbegin(); it != pool.rend() && reps.size() < static_cast<std::size_t>(opts.n_reps); ++it)
        if (std::find(reps.begin(), reps.end(), *it) == reps.end()) reps.push_back(*it);
    std::sort(reps.begin(), reps.end());

    OmegaLimitEstimate est;
    const std::size_t r = reps.size();
    est.dist_l2.assign(r, std::vector<double>(r, 0.0));
    est.dist_hminus1.assign(r, std::vector<double>(r, 0.0));
    for (std::size_t i = 0; i < r; ++i) {
        est.rep_times.push_back(traj.snapshots[reps[i]].t);
        for (std::size_t j = i + 1; j < r; ++j) {
            const Field d = traj.snapshots[reps[i]].phi - traj.snapshots[reps[j]].phi;
            const double l2 = norm_l2(d);
            const double hm = norm_hminus1(d);
            est.dist_l2[i][j] = est.dist_l2[j][i] = l2;
            est.dist_hminus1[i][j] = est.dist_hminus1[j][i] = hm;
            est.dispersion = std::max(est.dispersion, l2);
            est.dispersion_hminus1 = std::max(est.dispersion_hminus1, hm);
        }
    }
    est.singleton = est.dispersion < opts.tol;

    if (model && opts.polish) {
        const Field& last = traj.snapshots[reps.back()].phi;
        try {
            EquilibriumOptions eo;
            eo.tol = opts.polish_tol;
            eo.seed_id = fmt::format("trajectory:t={:.6g}", traj.snapshots[reps.back()].t);
            est.nearest = solve_equilibrium(*model, last.mean(), last, eo);
            est.nearest_distance = norm_l2(est.nearest->phi - last);
        } catch (const Error& e) {
            est.polish_error = e.what();
        }
    }
    return est;
}

}  // namespace pflab
