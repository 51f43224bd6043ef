#include "pflab/kernel.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include "pflab/errors.hpp"

namespace pflab {

namespace {

// FFTW's planner is not reentrant; execution with new-array calls is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double wrap_displacement(double d, double length, Boundary bc) {
    if (bc == Boundary::Periodic) return d - length * std::round(d / length);
    return d;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

struct KernelMatrix::Spectrum {
    std::array<int, 2> dims{1, 1};  // padded (or periodic) extent per axis
    std::vector<std::complex<double>> kernel_hat;

    std::size_t real_size() const { return static_cast<std::size_t>(dims[0]) * dims[1]; }
    std::size_t complex_size() const { return static_cast<std::size_t>(dims[0] / 2 + 1) * dims[1]; }
};

KernelMatrix::KernelMatrix(const Grid& grid, const KernelFn& kernel, double grad_l1)
    : grid_(grid), row_sums_(grid), grad_l1_(grad_l1) {
    const std::size_t n = grid.size();
    const double vol = grid.cell_volume();
    k_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    auto displacement = [&](std::size_t p, std::size_t q) {
        std::array<double, 2> d{0.0, 0.0};
        const int nx = grid.n(0);
        const int ip = static_cast<int>(p % nx), jp = static_cast<int>(p / nx);
        const int iq = static_cast<int>(q % nx), jq = static_cast<int>(q / nx);
        d[0] = wrap_displacement((ip - iq) * grid.h(0), grid.length(0), grid.boundary());
        if (grid.dim() == 2) d[1] = wrap_displacement((jp - jq) * grid.h(1), grid.length(1), grid.boundary());
        return d;
    };

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p; q < n; ++q) {
            const double v = kernel(displacement(p, q)) * vol;
            k_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = v;
            k_(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = v;
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        row_sums_[p] = k_.row(static_cast<Eigen::Index>(p)).sum();
        if (!std::isfinite(row_sums_[p])) throw ValidationError("kernel: non-finite row sum");
    }

    // Offset table for the transform path.
    auto spec = std::make_shared<Spectrum>();
    const bool periodic = grid.boundary() == Boundary::Periodic;
    for (int a = 0; a < grid.dim(); ++a) spec->dims[a] = periodic ? grid.n(a) : 2 * grid.n(a);
    const int px = spec->dims[0];
    const int py = spec->dims[1];

    std::unique_ptr<double, FftwDeleter> table(fftw_alloc_real(spec->real_size()));
    std::unique_ptr<fftw_complex, FftwDeleter> hat(fftw_alloc_complex(spec->complex_size()));
    for (std::size_t k = 0; k < spec->real_size(); ++k) table.get()[k] = 0.0;

    auto fill_offsets = [&](int dx, int dy) {
        std::array<double, 2> d{wrap_displacement(dx * grid.h(0), grid.length(0), grid.boundary()), 0.0};
        if (grid.dim() == 2) d[1] = wrap_displacement(dy * grid.h(1), grid.length(1), grid.boundary());
        const int ix = ((dx % px) + px) % px;
        const int iy = ((dy % py) + py) % py;
        table.get()[static_cast<std::size_t>(iy) * px + ix] = kernel(d) * vol;
    };
    const int lo_x = periodic ? 0 : -(grid.n(0) - 1);
    const int lo_y = (grid.dim() == 2 && !periodic) ? -(grid.n(1) - 1) : 0;
    const int hi_y = grid.dim() == 2 ? grid.n(1) - 1 : 0;
    for (int dy = lo_y; dy <= hi_y; ++dy)
        for (int dx = lo_x; dx <= grid.n(0) - 1; ++dx) fill_offsets(dx, dy);

    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_plan plan = grid.dim() == 2 ? fftw_plan_dft_r2c_2d(py, px, table.get(), hat.get(), FFTW_ESTIMATE)
                                         : fftw_plan_dft_r2c_1d(px, table.get(), hat.get(), FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    spec->kernel_hat.resize(spec->complex_size());
    for (std::size_t k = 0; k < spec->complex_size(); ++k)
        spec->kernel_hat[k] = {hat.get()[k][0], hat.get()[k][1]};
    spectrum_ = std::move(spec);
}

Field KernelMatrix::apply(const Field& phi) const {
    require_same_grid(grid_, phi.grid(), "kernel apply");
    Field out(grid_);
    Eigen::Map<const Eigen::VectorXd> x(phi.data().data(), static_cast<Eigen::Index>(phi.size()));
    Eigen::Map<Eigen::VectorXd> y(out.data().data(), static_cast<Eigen::Index>(out.size()));
    y.noalias() = k_ * x;
    return out;
}

Field KernelMatrix::apply_fast(const Field& phi) const {
    require_same_grid(grid_, phi.grid(), "kernel apply_fast");
    const Spectrum& s = *spectrum_;
    const int px = s.dims[0];
    const int py = s.dims[1];

    std::unique_ptr<double, FftwDeleter> buf(fftw_alloc_real(s.real_size()));
    std::unique_ptr<fftw_complex, FftwDeleter> hat(fftw_alloc_complex(s.complex_size()));
    for (std::size_t k = 0; k < s.real_size(); ++k) buf.get()[k] = 0.0;
    for (int j = 0; j < grid_.n(1); ++j)
        for (int i = 0; i < grid_.n(0); ++i)
            buf.get()[static_cast<std::size_t>(j) * px + i] = phi[grid_.index(i, j)];

    fftw_plan fwd;
    fftw_plan bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (grid_.dim() == 2) {
            fwd = fftw_plan_dft_r2c_2d(py, px, buf.get(), hat.get(), FFTW_ESTIMATE);
            bwd = fftw_plan_dft_c2r_2d(py, px, hat.get(), buf.get(), FFTW_ESTIMATE);
        } else {
            fwd = fftw_plan_dft_r2c_1d(px, buf.get(), hat.get(), FFTW_ESTIMATE);
            bwd = fftw_plan_dft_c2r_1d(px, hat.get(), buf.get(), FFTW_ESTIMATE);
        }
    }
    fftw_execute(fwd);
    for (std::size_t k = 0; k < s.complex_size(); ++k) {
        const std::complex<double> z = std::complex<double>(hat.get()[k][0], hat.get()[k][1]) * s.kernel_hat[k];
        hat.get()[k][0] = z.real();
        hat.get()[k][1] = z.imag();
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }

    const double norm = 1.0 / static_cast<double>(s.real_size());
    Field out(grid_);
    for (int j = 0; j < grid_.n(1); ++j)
        for (int i = 0; i < grid_.n(0); ++i)
            out[grid_.index(i, j)] = buf.get()[static_cast<std::size_t>(j) * px + i] * norm;
    return out;
}

}  // namespace pflab
