#include "pflab/grid.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "pflab/errors.hpp"
#include "pflab/sparse_ops.hpp"

namespace pflab {

std::string to_string(Boundary bc) { return bc == Boundary::Neumann ? "neumann" : "periodic"; }

Boundary boundary_from_string(const std::string& name) {
    if (name == "neumann" || name == "Neumann") return Boundary::Neumann;
    if (name == "periodic" || name == "Periodic") return Boundary::Periodic;
    throw ParseError("unknown boundary mode '" + name + "' (expected neumann|periodic)");
}

Grid::Grid(int dim, std::array<int, 2> n, std::array<double, 2> length, Boundary bc)
    : dim_(dim), n_(n), length_(length), bc_(bc) {
    for (int a = 0; a < dim_; ++a) {
        if (n_[a] < 1) throw ValidationError("grid: cell count per axis must be positive");
        if (!(length_[a] > 0.0) || !std::isfinite(length_[a]))
            throw ValidationError("grid: axis length must be positive and finite");
        if (bc_ == Boundary::Periodic && n_[a] < 2)
            throw ValidationError("grid: periodic axes need at least two cells");
    }
}

Grid Grid::line(int n, double length, Boundary bc) { return Grid(1, {n, 1}, {length, 1.0}, bc); }

Grid Grid::rect(int nx, int ny, double lx, double ly, Boundary bc) {
    return Grid(2, {nx, ny}, {lx, ly}, bc);
}

std::size_t Grid::face_count(int axis) const {
    if (axis >= dim_) return 0;
    if (axis == 0) return static_cast<std::size_t>(n_[0] + 1) * n_[1];
    return static_cast<std::size_t>(n_[0]) * (n_[1] + 1);
}

std::size_t Grid::face_index(int axis, int i, int j) const {
    if (axis == 0) return static_cast<std::size_t>(j) * (n_[0] + 1) + i;
    return static_cast<std::size_t>(j) * n_[0] + i;
}

bool Grid::operator==(const Grid& o) const {
    // Lengths may come back from snapshot headers as n * h, so compare them
    // to a relative tolerance.
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
    return dim_ == o.dim_ && n_ == o.n_ && close(length_[0], o.length_[0]) && close(length_[1], o.length_[1]) &&
           bc_ == o.bc_;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b) throw ShapeMismatch(std::string(where) + ": fields live on different grids");
}

// ---------------------------------------------------------------------------
// Field

Field::Field(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw ShapeMismatch("field: value count " + std::to_string(values_.size()) +
                            " does not match grid size " + std::to_string(grid_.size()));
}

double Field::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& o) {
    require_same_grid(grid_, o.grid_, "field +=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(grid_, o.grid_, "field -=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

Field& Field::operator+=(double c) {
    for (double& v : values_) v += c;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

FaceField::FaceField(const Grid& g, double value) : grid(g) {
    for (int a = 0; a < g.dim(); ++a) axis[a].assign(g.face_count(a), value);
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

// Visit every face normal to `axis` with the two adjacent cells; boundary
// faces report `interior == false` and, for periodic grids, the wrapped pair.
template <typename Fn>
void for_each_face(const Grid& g, int axis, Fn&& fn) {
    const int nx = g.n(0);
    const int ny = g.n(1);
    const bool periodic = g.boundary() == Boundary::Periodic;
    if (axis == 0) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i <= nx; ++i) {
                const std::size_t f = g.face_index(0, i, j);
                if (i > 0 && i < nx) {
                    fn(f, g.index(i - 1, j), g.index(i, j), true);
                } else if (periodic) {
                    fn(f, g.index(nx - 1, j), g.index(0, j), false);
                } else {
                    const int c = (i == 0) ? 0 : nx - 1;
                    fn(f, g.index(c, j), g.index(c, j), false);
                }
            }
        }
    } else {
        for (int j = 0; j <= ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t f = g.face_index(1, i, j);
                if (j > 0 && j < ny) {
                    fn(f, g.index(i, j - 1), g.index(i, j), true);
                } else if (periodic) {
                    fn(f, g.index(i, ny - 1), g.index(i, 0), false);
                } else {
                    const int c = (j == 0) ? 0 : ny - 1;
                    fn(f, g.index(i, c), g.index(i, c), false);
                }
            }
        }
    }
}

// Faces counted once in quadratures: interior faces plus, on periodic
// grids, the far boundary face (which duplicates face 0).
bool counted_face(const Grid& g, int axis, std::size_t f) {
    const int nx = g.n(0);
    if (axis == 0) {
        const int i = static_cast<int>(f % (nx + 1));
        if (i == 0) return false;
        return i < nx || g.boundary() == Boundary::Periodic;
    }
    const int j = static_cast<int>(f / nx);
    if (j == 0) return false;
    return j < g.n(1) || g.boundary() == Boundary::Periodic;
}

void require_same_grid(const FaceField& a, const Grid& g, const char* where) {
    if (a.grid != g) throw ShapeMismatch(std::string(where) + ": face field and cell field grids differ");
}

}  // namespace

FaceField gradient(const Field& phi) {
    const Grid& g = phi.grid();
    FaceField out(g);
    for (int a = 0; a < g.dim(); ++a) {
        const double inv_h = 1.0 / g.h(a);
        const bool periodic = g.boundary() == Boundary::Periodic;
        for_each_face(g, a, [&](std::size_t f, std::size_t lo, std::size_t hi, bool interior) {
            out.axis[a][f] = (interior || periodic) ? (phi[hi] - phi[lo]) * inv_h : 0.0;
        });
    }
    return out;
}

FaceField face_average(const Field& c, FaceAverage mode) {
    const Grid& g = c.grid();
    FaceField out(g);
    for (int a = 0; a < g.dim(); ++a) {
        for_each_face(g, a, [&](std::size_t f, std::size_t lo, std::size_t hi, bool) {
            const double x = c[lo];
            const double y = c[hi];
            if (mode == FaceAverage::Arithmetic) {
                out.axis[a][f] = 0.5 * (x + y);
            } else {
                out.axis[a][f] = (x + y) > 0.0 ? 2.0 * x * y / (x + y) : 0.0;
            }
        });
    }
    return out;
}

FaceField multiply(const FaceField& a, const FaceField& b) {
    if (a.grid != b.grid) throw ShapeMismatch("face multiply: grids differ");
    FaceField out(a.grid);
    for (int ax = 0; ax < a.grid.dim(); ++ax)
        for (std::size_t f = 0; f < out.axis[ax].size(); ++f) out.axis[ax][f] = a.axis[ax][f] * b.axis[ax][f];
    return out;
}

Field divergence(const FaceField& flux) {
    const Grid& g = flux.grid;
    Field out(g);
    const int nx = g.n(0);
    const int ny = g.n(1);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double d = (flux.axis[0][g.face_index(0, i + 1, j)] - flux.axis[0][g.face_index(0, i, j)]) / g.h(0);
            if (g.dim() == 2)
                d += (flux.axis[1][g.face_index(1, i, j + 1)] - flux.axis[1][g.face_index(1, i, j)]) / g.h(1);
            out[g.index(i, j)] = d;
        }
    }
    return out;
}

Field weighted_div_grad(const Field& phi, const FaceField& weights) {
    require_same_grid(weights, phi.grid(), "weighted_div_grad");
    return divergence(multiply(weights, gradient(phi)));
}

Field cell_grad_squared(const FaceField& grad) {
    const Grid& g = grad.grid;
    Field out(g);
    for (int j = 0; j < g.n(1); ++j) {
        for (int i = 0; i < g.n(0); ++i) {
            const double l = grad.axis[0][g.face_index(0, i, j)];
            const double r = grad.axis[0][g.face_index(0, i + 1, j)];
            double s = 0.5 * (l * l + r * r);
            if (g.dim() == 2) {
                const double b = grad.axis[1][g.face_index(1, i, j)];
                const double t = grad.axis[1][g.face_index(1, i, j + 1)];
                s += 0.5 * (b * b + t * t);
            }
            out[g.index(i, j)] = s;
        }
    }
    return out;
}

double face_inner(const FaceField& a, const FaceField& b) {
    if (a.grid != b.grid) throw ShapeMismatch("face_inner: grids differ");
    const Grid& g = a.grid;
    double s = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax)
        for (std::size_t f = 0; f < a.axis[ax].size(); ++f)
            if (counted_face(g, ax, f)) s += a.axis[ax][f] * b.axis[ax][f];
    return s * g.cell_volume();
}

double inner(const Field& u, const Field& v) {
    require_same_grid(u.grid(), v.grid(), "inner");
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
    return s * u.grid().cell_volume();
}

double norm_l2(const Field& u) { return std::sqrt(inner(u, u)); }

double norm_h1_semi(const Field& u) {
    const FaceField g = gradient(u);
    return std::sqrt(face_inner(g, g));
}

double norm_hminus1(const Field& u, const HMinusOneOptions& opts) {
    const Grid& g = u.grid();
    Field rhs = u;
    rhs += -u.mean();
    if (rhs.max_abs() == 0.0) return 0.0;

    // -Lap is symmetric positive semidefinite with the constants as kernel;
    // CG stays in the mean-free subspace for a mean-free right-hand side.
    SparseMatrix neg_lap = -div_grad_matrix(FaceField(g, 1.0));
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(opts.rel_tol);
    cg.setMaxIterations(opts.max_iter);
    cg.compute(neg_lap);
    Eigen::VectorXd v = cg.solve(as_vector(rhs));
    if (cg.info() != Eigen::Success || !(cg.error() <= opts.rel_tol))
        throw SolverNotConverged("norm_hminus1: CG stopped after " + std::to_string(cg.iterations()) +
                                 " iterations at relative residual " + std::to_string(cg.error()));
    v.array() -= v.mean();
    Field vf(g, std::vector<double>(v.data(), v.data() + v.size()));
    return std::sqrt(std::max(0.0, inner(rhs, vf)));
}

// ---------------------------------------------------------------------------
// Sparse assembly

void append_div_grad(const FaceField& weights, double scale, Eigen::Index row_offset, Eigen::Index col_offset,
                     Triplets& out) {
    const Grid& g = weights.grid;
    const bool periodic = g.boundary() == Boundary::Periodic;
    for (int a = 0; a < g.dim(); ++a) {
        const double c = scale / (g.h(a) * g.h(a));
        for_each_face(g, a, [&](std::size_t f, std::size_t lo, std::size_t hi, bool interior) {
            if (!interior && !periodic) return;
            if (!counted_face(g, a, f)) return;
            const double w = c * weights.axis[a][f];
            const auto p = static_cast<Eigen::Index>(lo);
            const auto q = static_cast<Eigen::Index>(hi);
            out.emplace_back(row_offset + p, col_offset + q, w);
            out.emplace_back(row_offset + p, col_offset + p, -w);
            out.emplace_back(row_offset + q, col_offset + p, w);
            out.emplace_back(row_offset + q, col_offset + q, -w);
        });
    }
}

SparseMatrix div_grad_matrix(const FaceField& weights) {
    const auto n = static_cast<Eigen::Index>(weights.grid.size());
    Triplets t;
    append_div_grad(weights, 1.0, 0, 0, t);
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace pflab
