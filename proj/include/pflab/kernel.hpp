#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>

#include "pflab/grid.hpp"

namespace pflab {

/// Kernel evaluated on a displacement vector (second component ignored in 1D).
using KernelFn = std::function<double(const std::array<double, 2>&)>;

/**
 * Dense interaction matrix K[i][j] = J(x_i - x_j) * cell_volume.
 *
 * Displacements are taken inside the domain on Neumann grids (so K applied
 * to phi is the quadrature of the convolution over the rectangle only) and
 * as minimal images on periodic grids. Only the upper triangle is evaluated;
 * the lower one is mirrored, so K is exactly symmetric.
 */
class KernelMatrix {
public:
    KernelMatrix(const Grid& grid, const KernelFn& kernel, double grad_l1 = 0.0);

    const Grid& grid() const { return grid_; }
    const Eigen::MatrixXd& matrix() const { return k_; }
    /// Row sums w_i = (J * 1)(x_i).
    const Field& row_sums() const { return row_sums_; }
    double grad_l1() const { return grad_l1_; }

    /// Dense path: (J * phi)(x_i) = sum_j K[i][j] phi_j.
    Field apply(const Field& phi) const;

    /// FFT path. Zero-padded linear convolution on Neumann grids,
    /// circular convolution on periodic ones; agrees with apply() to roundoff.
    Field apply_fast(const Field& phi) const;

private:
    struct Spectrum;

    Grid grid_;
    Eigen::MatrixXd k_;
    Field row_sums_;
    double grad_l1_ = 0.0;
    std::shared_ptr<const Spectrum> spectrum_;
};

}  // namespace pflab
