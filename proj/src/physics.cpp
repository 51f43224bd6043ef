#include "pflab/physics.hpp"

#include <fmt/format.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>

#include "pflab/errors.hpp"

namespace pflab {

// ---------------------------------------------------------------------------
// Potential

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double polynomial(const std::vector<double>& c, double s) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
}

double polynomial_derivative(const std::vector<double>& c, double s) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) v = v * s + static_cast<double>(k) * c[k];
    return v;
}

}  // namespace

double eval_potential(const PotentialSpec& p, double s, int order) {
    if (!std::isfinite(s)) throw DomainError("potential: non-finite argument");
    if (order == 0) {
        if (std::abs(s) > 1.0) throw DomainError(fmt::format("potential: F({}) undefined outside [-1, 1]", s));
    } else if (std::abs(s) > 1.0 - p.guard_eps) {
        throw DomainError(fmt::format("potential: F^({}) evaluated at {} inside the guard band", order, s));
    }

    if (p.kind == PotentialKind::Custom) {
        switch (order) {
            case 0: return p.custom.value(s);
            case 1: return p.custom.first(s);
            case 2: return p.custom.second(s);
            default: throw DomainError("potential: order must be 0, 1 or 2");
        }
    }
    switch (order) {
        case 0: return 0.5 * p.theta * (xlogx(1.0 + s) + xlogx(1.0 - s));
        case 1: return 0.5 * p.theta * (std::log1p(s) - std::log1p(-s));
        case 2: return p.theta / ((1.0 - s) * (1.0 + s));
        default: throw DomainError("potential: order must be 0, 1 or 2");
    }
}

void validate(const PotentialSpec& p) {
    if (!(p.theta > 0.0)) throw ValidationError("potential: theta must be positive");
    if (!(p.theta0 > p.theta)) throw ValidationError("potential: theta0 must exceed theta");
    if (!(p.guard_eps > 0.0 && p.guard_eps < 1e-3)) throw ValidationError("potential: guard_eps must lie in (0, 1e-3)");
    if (p.kind == PotentialKind::Custom && (!p.custom.value || !p.custom.first || !p.custom.second))
        throw ValidationError("potential: custom kind needs F, F' and F''");

    if (std::abs(eval_potential(p, 0.0, 0)) > 1e-14) throw ValidationError("potential: F(0) must vanish");
    if (std::abs(eval_potential(p, 0.0, 1)) > 1e-14) throw ValidationError("potential: F'(0) must vanish");

    constexpr int samples = 4001;
    for (int k = 0; k < samples; ++k) {
        const double s = -1.0 + 1e-9 + (2.0 - 2e-9) * k / (samples - 1);
        const double f2 = eval_potential(p, s, 2);
        if (!(f2 >= p.theta * (1.0 - 1e-12)))
            throw ValidationError(fmt::format("potential: F''({}) = {} below theta = {}", s, f2, p.theta));
    }

    // F' must blow up at the pure phases: check growth across the last decades.
    for (double sign : {1.0, -1.0}) {
        const double near = sign * eval_potential(p, sign * (1.0 - 1e-3), 1);
        const double nearer = sign * eval_potential(p, sign * (1.0 - 1e-12), 1);
        if (!(nearer >= near + p.theta))
            throw ValidationError("potential: F' does not diverge at the pure phases");
    }
}

// ---------------------------------------------------------------------------
// Coefficients

double MobilitySpec::operator()(double s) const {
    return kind == CoefficientKind::Constant ? m_star : polynomial(coeffs, s);
}

void validate(const MobilitySpec& m) {
    if (!(m.m_star > 0.0)) throw ValidationError("mobility: m_star must be positive");
    if (m.kind == CoefficientKind::Polynomial && m.coeffs.empty())
        throw ValidationError("mobility: polynomial kind needs coeffs");
    for (int k = 0; k <= 2000; ++k) {
        const double s = -1.0 + k / 1000.0;
        if (!(m(s) >= m.m_star * (1.0 - 1e-14)))
            throw ValidationError(fmt::format("mobility: m({}) = {} below m_star = {}", s, m(s), m.m_star));
    }
}

double DiffusionSpec::value(double s) const {
    return kind == CoefficientKind::Constant ? a_star : polynomial(coeffs, s);
}

double DiffusionSpec::derivative(double s) const {
    return kind == CoefficientKind::Constant ? 0.0 : polynomial_derivative(coeffs, s);
}

double DiffusionSpec::primitive_sqrt(double s) const {
    if (s == 0.0) return 0.0;
    auto integrand = [this](double t) { return std::sqrt(value(t)); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, s, 15, 1e-13);
}

bool DiffusionSpec::is_constant_one() const {
    if (kind == CoefficientKind::Constant) return a_star == 1.0;
    if (coeffs.empty() || coeffs[0] != 1.0) return false;
    for (std::size_t k = 1; k < coeffs.size(); ++k)
        if (coeffs[k] != 0.0) return false;
    return true;
}

void validate(const DiffusionSpec& a) {
    if (!(a.a_star > 0.0)) throw ValidationError("diffusion: a_star must be positive");
    if (a.kind == CoefficientKind::Polynomial && a.coeffs.empty())
        throw ValidationError("diffusion: polynomial kind needs coeffs");
    constexpr double step = 1e-5;
    for (int k = 0; k <= 2000; ++k) {
        const double s = -1.0 + k / 1000.0;
        if (!(a.value(s) >= a.a_star * (1.0 - 1e-14)))
            throw ValidationError(fmt::format("diffusion: a({}) = {} below a_star = {}", s, a.value(s), a.a_star));
        const double fd = (a.value(s + step) - a.value(s - step)) / (2.0 * step);
        const double an = a.derivative(s);
        if (std::abs(fd - an) > 1e-6 * std::max(1.0, std::abs(an)))
            throw ValidationError(fmt::format("diffusion: a'({}) inconsistent with a", s));
    }
}

// ---------------------------------------------------------------------------
// Kernel

double KernelSpec::operator()(double r, int dim) const {
    using std::numbers::pi;
    if (kind == KernelKind::Gaussian) {
        if (support > 0.0 && r > support) return 0.0;
        const double norm = std::pow(2.0 * pi * scale * scale, -0.5 * dim);
        return strength * norm * std::exp(-r * r / (2.0 * scale * scale));
    }
    if (r > scale) return 0.0;
    const double ball = dim == 1 ? 2.0 * scale : pi * scale * scale;
    return strength / ball;
}

KernelFn KernelSpec::function(int dim) const {
    KernelSpec self = *this;
    return [self, dim](const std::array<double, 2>& d) { return self(std::hypot(d[0], d[1]), dim); };
}

void validate(const KernelSpec& k) {
    if (!(k.scale > 0.0)) throw ValidationError("kernel: scale must be positive");
    if (k.support < 0.0) throw ValidationError("kernel: support must be nonnegative");
    if (!(k.strength >= 0.0)) throw ValidationError("kernel: strength must be nonnegative");
}

double kernel_grad_l1(const KernelSpec& k, const Grid& grid) {
    const int dim = grid.dim();
    const double lx = grid.length(0);
    const double ly = dim == 2 ? grid.length(1) : 0.0;
    const double spacing = std::min(k.scale / 40.0, std::max(lx, ly) / 800.0);
    const int nx = static_cast<int>(std::ceil(2.0 * lx / spacing));
    const double dx = 2.0 * lx / nx;

    if (dim == 1) {
        // Total variation of the sampled profile; exact on monotone pieces.
        double tv = 0.0;
        double prev = k(lx, 1);
        for (int i = 1; i <= nx; ++i) {
            const double x = lx - i * dx;
            const double cur = k(std::abs(x), 1);
            tv += std::abs(cur - prev);
            prev = cur;
        }
        return tv;
    }

    const int ny = static_cast<int>(std::ceil(2.0 * ly / spacing));
    const double dy = 2.0 * ly / ny;
    double sum = 0.0;
    for (int j = 0; j < ny; ++j) {
        const double y = -ly + j * dy;
        for (int i = 0; i < nx; ++i) {
            const double x = -lx + i * dx;
            const double v = k(std::hypot(x, y), 2);
            const double gx = (k(std::hypot(x + dx, y), 2) - v) / dx;
            const double gy = (k(std::hypot(x, y + dy), 2) - v) / dy;
            sum += std::hypot(gx, gy);
        }
    }
    return sum * dx * dy;
}

// ---------------------------------------------------------------------------
// Model

std::string to_string(Preset p) {
    switch (p) {
        case Preset::ChNonlinear: return "CH_NONLINEAR";
        case Preset::ConservedAc: return "CONSERVED_AC";
        case Preset::NonlocalCh: return "NONLOCAL_CH";
        default: return "CUSTOM";
    }
}

Preset preset_from_string(const std::string& name) {
    if (name == "CH_NONLINEAR") return Preset::ChNonlinear;
    if (name == "CONSERVED_AC") return Preset::ConservedAc;
    if (name == "NONLOCAL_CH") return Preset::NonlocalCh;
    if (name == "CUSTOM") return Preset::Custom;
    throw ValidationError("unknown preset '" + name + "' (expected CH_NONLINEAR|CONSERVED_AC|NONLOCAL_CH)");
}

ModelConfig ModelConfig::ch_nonlinear(double alpha, double gamma) {
    ModelConfig m;
    m.preset = Preset::ChNonlinear;
    m.alpha = alpha;
    m.beta = 0.0;
    m.gamma = gamma;
    m.sigma1 = 1;
    m.sigma2 = 0;
    return m;
}

ModelConfig ModelConfig::conserved_ac(double beta, double gamma) {
    ModelConfig m;
    m.preset = Preset::ConservedAc;
    m.alpha = 0.0;
    m.beta = beta;
    m.gamma = gamma;
    m.sigma1 = 1;
    m.sigma2 = 0;
    return m;
}

ModelConfig ModelConfig::nonlocal_ch(const KernelSpec& kernel, double alpha) {
    ModelConfig m;
    m.preset = Preset::NonlocalCh;
    m.alpha = alpha;
    m.beta = 0.0;
    m.gamma = 0.0;
    m.sigma1 = 0;
    m.sigma2 = 1;
    m.kernel = kernel;
    return m;
}

void validate(const ModelConfig& m) {
    if (m.alpha < 0.0 || m.beta < 0.0 || m.gamma < 0.0)
        throw ValidationError("model: alpha, beta, gamma must be nonnegative");
    if (!(m.alpha > 0.0 || m.beta > 0.0)) throw ValidationError("model: alpha or beta must be positive");
    if ((m.sigma1 != 0 && m.sigma1 != 1) || (m.sigma2 != 0 && m.sigma2 != 1))
        throw ValidationError("model: sigma1 and sigma2 must be 0 or 1");
    if (m.sigma2 == 1 && !m.kernel) throw ValidationError("model: sigma2 = 1 requires a kernel");
    if (m.sigma2 == 0 && m.kernel) throw ValidationError("model: kernel given but sigma2 = 0");

    auto require = [&](bool ok, const char* what) {
        if (!ok) throw ValidationError(fmt::format("model: preset {} requires {}", to_string(m.preset), what));
    };
    switch (m.preset) {
        case Preset::ChNonlinear:
            require(m.alpha > 0.0 && m.beta == 0.0 && m.gamma > 0.0, "alpha > 0, beta = 0, gamma > 0");
            require(m.sigma1 == 1 && m.sigma2 == 0, "sigma1 = 1, sigma2 = 0");
            break;
        case Preset::ConservedAc:
            require(m.alpha == 0.0 && m.beta > 0.0 && m.gamma > 0.0, "alpha = 0, beta > 0, gamma > 0");
            require(m.sigma1 == 1 && m.sigma2 == 0, "sigma1 = 1, sigma2 = 0");
            require(m.diffusion.is_constant_one(), "a = 1");
            break;
        case Preset::NonlocalCh:
            require(m.alpha > 0.0 && m.beta == 0.0 && m.gamma == 0.0, "alpha > 0, beta = gamma = 0");
            require(m.sigma1 == 0 && m.sigma2 == 1, "sigma1 = 0, sigma2 = 1");
            require(m.diffusion.is_constant_one(), "a = 1");
            break;
        case Preset::Custom: break;
    }
    validate(m.potential);
    validate(m.mobility);
    validate(m.diffusion);
    if (m.kernel) validate(*m.kernel);
}

namespace {

double bulk_density(const ModelConfig& m, double s) {
    return eval_potential(m.potential, s, 0) - m.sigma1 * 0.5 * m.potential.theta0 * s * s;
}

double min_bulk_density(const ModelConfig& m) {
    constexpr int samples = 20001;
    int best = 0;
    double best_val = bulk_density(m, -1.0);
    for (int k = 1; k < samples; ++k) {
        const double s = -1.0 + 2.0 * k / (samples - 1);
        const double v = bulk_density(m, s);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    const double lo = std::max(-1.0, -1.0 + 2.0 * (best - 1) / (samples - 1));
    const double hi = std::min(1.0, -1.0 + 2.0 * (best + 1) / (samples - 1));
    auto refined = boost::math::tools::brent_find_minima([&](double s) { return bulk_density(m, s); }, lo, hi, 52);
    return std::min(best_val, refined.second);
}

}  // namespace

Model::Model(ModelConfig config, const Grid& grid) : config_(std::move(config)), grid_(grid) {
    validate(config_);
    if (config_.sigma2 == 1) {
        const KernelSpec& k = *config_.kernel;
        kernel_ = std::make_shared<KernelMatrix>(grid_, k.function(grid_.dim()), kernel_grad_l1(k, grid_));
    }
    // Gradient and double-integral terms are nonnegative, so the bulk term bounds E below.
    energy_floor_ = std::min(0.0, grid_.volume() * min_bulk_density(config_));
}

const KernelMatrix& Model::kernel() const {
    if (!kernel_) throw Error("model: no kernel (sigma2 = 0)");
    return *kernel_;
}

// ---------------------------------------------------------------------------
// Assembly

Field map_potential(const PotentialSpec& p, const Field& phi, int order) {
    Field out(phi.grid());
    for (std::size_t k = 0; k < phi.size(); ++k) out[k] = eval_potential(p, phi[k], order);
    return out;
}

FaceField mobility_at_faces(const Model& model, const Field& phi) {
    Field m(phi.grid());
    for (std::size_t k = 0; k < phi.size(); ++k) m[k] = model.config().mobility(phi[k]);
    return face_average(m, model.config().mobility_average);
}

FaceField diffusion_at_faces(const Model& model, const Field& phi) {
    Field a(phi.grid());
    for (std::size_t k = 0; k < phi.size(); ++k) a[k] = model.config().diffusion.value(phi[k]);
    return face_average(a, FaceAverage::Arithmetic);
}

Field chemical_potential(const Model& model, const Field& phi) {
    require_same_grid(model.grid(), phi.grid(), "chemical_potential");
    const ModelConfig& c = model.config();
    Field mu = map_potential(c.potential, phi, 1);

    if (c.gamma > 0.0) {
        const FaceField grad = gradient(phi);
        const Field div = divergence(multiply(diffusion_at_faces(model, phi), grad));
        const Field grad_sq = cell_grad_squared(grad);
        for (std::size_t k = 0; k < phi.size(); ++k)
            mu[k] += -c.gamma * div[k] + c.gamma * 0.5 * c.diffusion.derivative(phi[k]) * grad_sq[k];
    }
    if (c.sigma1 == 1)
        for (std::size_t k = 0; k < phi.size(); ++k) mu[k] -= c.potential.theta0 * phi[k];
    if (c.sigma2 == 1) {
        const Field conv = model.kernel().apply(phi);
        const Field& w = model.kernel().row_sums();
        for (std::size_t k = 0; k < phi.size(); ++k) {
            mu[k] -= conv[k];
            if (c.nonlocal_consistency) mu[k] += w[k] * phi[k];
        }
    }
    return mu;
}

Field variational_correction(const Model& model, const Field& phi) {
    Field out(phi.grid());
    const ModelConfig& c = model.config();
    if (c.sigma2 == 1 && !c.nonlocal_consistency) {
        const Field& w = model.kernel().row_sums();
        for (std::size_t k = 0; k < phi.size(); ++k) out[k] = w[k] * phi[k];
    }
    return out;
}

double energy(const Model& model, const Field& phi) {
    require_same_grid(model.grid(), phi.grid(), "energy");
    const ModelConfig& c = model.config();
    const double vol = phi.grid().cell_volume();
    double e = 0.0;
    if (c.gamma > 0.0) {
        const FaceField grad = gradient(phi);
        e += 0.5 * c.gamma * face_inner(multiply(diffusion_at_faces(model, phi), grad), grad);
    }
    double bulk = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        bulk += eval_potential(c.potential, phi[k], 0);
        if (c.sigma1 == 1) bulk -= 0.5 * c.potential.theta0 * phi[k] * phi[k];
    }
    e += bulk * vol;
    if (c.sigma2 == 1) {
        // 1/4 sum_ij K_ij (phi_i - phi_j)^2 = 1/2 (sum_i w_i phi_i^2 - phi^T K phi)
        const Field conv = model.kernel().apply(phi);
        const Field& w = model.kernel().row_sums();
        double s = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) s += phi[k] * (w[k] * phi[k] - conv[k]);
        e += 0.5 * s * vol;
    }
    return e;
}

double dissipation_rate(const Model& model, const FaceField& mobility_faces, const Field& mu) {
    const ModelConfig& c = model.config();
    double d = 0.0;
    if (c.alpha > 0.0) {
        const FaceField g = gradient(mu);
        d += c.alpha * face_inner(multiply(mobility_faces, g), g);
    }
    if (c.beta > 0.0) {
        Field fluct = mu;
        fluct += -mu.mean();
        d += c.beta * inner(fluct, fluct);
    }
    return d;
}

double dissipation_rate(const Model& model, const Field& phi, const Field& mu) {
    return dissipation_rate(model, mobility_at_faces(model, phi), mu);
}

double dissipation_norm(const Model& model, const Field& mu) {
    if (model.uses_gradient_norm()) return norm_h1_semi(mu);
    Field fluct = mu;
    fluct += -mu.mean();
    return norm_l2(fluct);
}

}  // namespace pflab
