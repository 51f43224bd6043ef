#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pflab {

enum class Boundary { Neumann, Periodic };

std::string to_string(Boundary bc);
Boundary boundary_from_string(const std::string& name);

/**
 * Uniform cell-centered grid on a rectangle [0, L_x] (x [0, L_y]).
 *
 * Cells are stored row-major: index(i, j) = j * nx + i, so the x index
 * runs fastest. Faces normal to axis 0 are numbered 0..nx per row, face i
 * sitting between cells i-1 and i; likewise for axis 1.
 */
class Grid {
public:
    Grid() = default;

    static Grid line(int n, double length, Boundary bc = Boundary::Neumann);
    static Grid rect(int nx, int ny, double lx, double ly, Boundary bc = Boundary::Neumann);

    int dim() const { return dim_; }
    int n(int axis) const { return n_[axis]; }
    double length(int axis) const { return length_[axis]; }
    double h(int axis) const { return length_[axis] / n_[axis]; }
    Boundary boundary() const { return bc_; }

    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * n_[1]; }
    double cell_volume() const { return h(0) * (dim_ == 2 ? h(1) : 1.0); }
    double volume() const { return length_[0] * (dim_ == 2 ? length_[1] : 1.0); }

    std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(j) * n_[0] + i; }
    double center(int axis, int i) const { return (i + 0.5) * h(axis); }

    /// Number of faces normal to `axis`, including both boundary faces.
    std::size_t face_count(int axis) const;
    std::size_t face_index(int axis, int i, int j) const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    Grid(int dim, std::array<int, 2> n, std::array<double, 2> length, Boundary bc);

    int dim_ = 1;
    std::array<int, 2> n_{1, 1};
    std::array<double, 2> length_{1.0, 1.0};
    Boundary bc_ = Boundary::Neumann;
};

/// Cell-centered scalar field bound to a grid.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double value = 0.0);
    Field(const Grid& grid, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    double mean() const;
    double min() const;
    double max() const;
    double max_abs() const;
    bool all_finite() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
    Field& operator+=(double c);

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Face-centered values, one array per axis, each including boundary faces.
struct FaceField {
    Grid grid;
    std::array<std::vector<double>, 2> axis;

    explicit FaceField(const Grid& g, double value = 0.0);
    FaceField() = default;
};

enum class FaceAverage { Arithmetic, Harmonic };

/// Face differences (phi_i - phi_{i-1}) / h; zero on Neumann boundary faces,
/// wrapped on periodic ones.
FaceField gradient(const Field& phi);

/// Interpolate cell values onto faces.
FaceField face_average(const Field& cell_values, FaceAverage mode = FaceAverage::Arithmetic);

/// Face-wise product.
FaceField multiply(const FaceField& a, const FaceField& b);

/// Discrete divergence of a face flux.
Field divergence(const FaceField& flux);

/// div(w grad phi); the sum over cells of result * cell volume is zero.
Field weighted_div_grad(const Field& phi, const FaceField& weights);

/// Per-cell average of the squared face gradients, summed over axes.
Field cell_grad_squared(const FaceField& grad);

/// Sum over distinct faces of a*b*cell_volume (each periodic wrap face once).
double face_inner(const FaceField& a, const FaceField& b);

double inner(const Field& u, const Field& v);
double norm_l2(const Field& u);
double norm_h1_semi(const Field& u);

struct HMinusOneOptions {
    double rel_tol = 1e-10;
    int max_iter = 20000;
};

/// Dual norm sqrt((u, (-Lap)^{-1} u)) of the mean-free part of u.
double norm_hminus1(const Field& u, const HMinusOneOptions& opts = {});

void require_same_grid(const Grid& a, const Grid& b, const char* where);

}  // namespace pflab
