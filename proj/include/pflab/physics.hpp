#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pflab/grid.hpp"
#include "pflab/kernel.hpp"

namespace pflab {

// ---------------------------------------------------------------------------
// Potential

enum class PotentialKind { Logarithmic, Custom };

/// User-supplied convex part F with its first two derivatives on (-1, 1).
struct CustomPotential {
    std::function<double(double)> value;
    std::function<double(double)> first;
    std::function<double(double)> second;
};

/**
 * Singular potential f(s) = F(s) - (theta0/2) s^2.
 *
 * The Logarithmic kind is the Flory-Huggins mixing entropy
 * F(s) = theta/2 ((1+s)ln(1+s) + (1-s)ln(1-s)), extended continuously to
 * s = +-1 with F(+-1) = theta ln 2.
 */
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Logarithmic;
    double theta = 0.3;
    double theta0 = 1.0;
    /// Smallest admitted distance to +-1 for F' and F''.
    double guard_eps = 1e-14;
    CustomPotential custom;
};

/// F (order 0), F' (order 1) or F'' (order 2). Throws DomainError outside
/// [-1, 1] for order 0 and outside [-1 + eps, 1 - eps] for orders 1 and 2.
double eval_potential(const PotentialSpec& p, double s, int order);

/// Checks F(0) = F'(0) = 0, F'' >= theta on a dense sample, divergence of F'
/// at the pure phases, and 0 < theta < theta0. Throws ValidationError.
void validate(const PotentialSpec& p);

// ---------------------------------------------------------------------------
// Mobility and nonlinear diffusion

enum class CoefficientKind { Constant, Polynomial };

struct MobilitySpec {
    CoefficientKind kind = CoefficientKind::Constant;
    double m_star = 1.0;
    std::vector<double> coeffs;  ///< m(s) = sum_k coeffs[k] s^k when Polynomial

    double operator()(double s) const;
};

void validate(const MobilitySpec& m);

struct DiffusionSpec {
    CoefficientKind kind = CoefficientKind::Constant;
    double a_star = 1.0;
    std::vector<double> coeffs;  ///< a(s) = sum_k coeffs[k] s^k when Polynomial

    double value(double s) const;
    double derivative(double s) const;
    /// A(s) = int_0^s sqrt(a(t)) dt by adaptive Gauss-Kronrod quadrature.
    double primitive_sqrt(double s) const;
    bool is_constant_one() const;
};

void validate(const DiffusionSpec& a);

// ---------------------------------------------------------------------------
// Interaction kernel

enum class KernelKind { Gaussian, Tophat };

/**
 * Even interaction kernel J, built from |x| so symmetry is structural.
 *
 * Gaussian: strength * (2 pi scale^2)^(-d/2) exp(-|x|^2 / (2 scale^2)) for
 * |x| <= support (support <= 0 means untruncated).
 * Tophat: strength / |B(scale)| inside the ball of radius scale.
 */
struct KernelSpec {
    KernelKind kind = KernelKind::Gaussian;
    double scale = 0.1;
    double support = 0.0;
    double strength = 1.0;

    double operator()(double r, int dim) const;
    KernelFn function(int dim) const;
};

void validate(const KernelSpec& k);

/// Total-variation estimate of ||grad J||_{L^1} over the difference set
/// [-L_x, L_x] (x [-L_y, L_y]) of the grid's domain.
double kernel_grad_l1(const KernelSpec& k, const Grid& grid);

// ---------------------------------------------------------------------------
// Model

enum class Preset { Custom, ChNonlinear, ConservedAc, NonlocalCh };

std::string to_string(Preset p);
Preset preset_from_string(const std::string& name);

/**
 * Constants of the general model
 *   d_t phi = alpha div(m(phi) grad mu) - beta (mu - mean mu),
 *   mu = -gamma div(a(phi) grad phi) + gamma a'(phi)/2 |grad phi|^2
 *        + F'(phi) - sigma1 theta0 phi - sigma2 J*phi.
 */
struct ModelConfig {
    Preset preset = Preset::Custom;
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 1e-3;
    int sigma1 = 1;
    int sigma2 = 0;
    PotentialSpec potential;
    MobilitySpec mobility;
    DiffusionSpec diffusion;
    std::optional<KernelSpec> kernel;
    /// When set, mu includes +sigma2 (J*1) phi so that mu is the exact first
    /// variation of the double-integral energy.
    bool nonlocal_consistency = true;
    FaceAverage mobility_average = FaceAverage::Arithmetic;

    /// Cahn-Hilliard with nonlinear diffusion (alpha > 0, beta = 0, sigma1 = 1).
    static ModelConfig ch_nonlinear(double alpha = 1.0, double gamma = 1e-3);
    /// Conserved Allen-Cahn (alpha = 0, beta > 0, sigma1 = 1, a = 1).
    static ModelConfig conserved_ac(double beta = 1.0, double gamma = 1e-3);
    /// Nonlocal Cahn-Hilliard (alpha > 0, beta = gamma = sigma1 = 0, sigma2 = 1, a = 1).
    static ModelConfig nonlocal_ch(const KernelSpec& kernel, double alpha = 1.0);
};

/// Validates constants, the preset table and every coefficient spec.
void validate(const ModelConfig& m);

/// A validated ModelConfig bound to a grid, with its kernel matrix built.
class Model {
public:
    Model(ModelConfig config, const Grid& grid);

    const ModelConfig& config() const { return config_; }
    const Grid& grid() const { return grid_; }
    bool has_kernel() const { return static_cast<bool>(kernel_); }
    const KernelMatrix& kernel() const;

    /// Lower bound |Omega| * min_{[-1,1]} f of the energy (F alone when sigma1 = 0).
    double energy_floor() const { return energy_floor_; }

    /// Which dissipation norm classifies good times: grad mu for alpha > 0,
    /// mu - mean(mu) otherwise.
    bool uses_gradient_norm() const { return config_.alpha > 0.0; }

private:
    ModelConfig config_;
    Grid grid_;
    std::shared_ptr<const KernelMatrix> kernel_;
    double energy_floor_ = 0.0;
};

Field map_potential(const PotentialSpec& p, const Field& phi, int order);
FaceField mobility_at_faces(const Model& model, const Field& phi);
FaceField diffusion_at_faces(const Model& model, const Field& phi);

Field chemical_potential(const Model& model, const Field& phi);

/// Amount by which chemical_potential differs from the first variation of
/// energy(): sigma2 (J*1) phi when nonlocal_consistency is off, zero otherwise.
Field variational_correction(const Model& model, const Field& phi);

double energy(const Model& model, const Field& phi);

/// alpha sum_faces m_face |grad mu|^2 vol + beta sum (mu - mean mu)^2 vol,
/// with the mobility evaluated at `phi`.
double dissipation_rate(const Model& model, const Field& phi, const Field& mu);
double dissipation_rate(const Model& model, const FaceField& mobility_faces, const Field& mu);

/// ||grad mu||_{L^2} for alpha > 0, ||mu - mean mu||_{L^2} otherwise.
double dissipation_norm(const Model& model, const Field& mu);

}  // namespace pflab
