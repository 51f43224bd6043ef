#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pflab/errors.hpp"
#include "pflab/grid.hpp"
#include "test_util.hpp"

using namespace pflab;
using pflab::test::random_field;

namespace {

// Independent face loop: sum over faces of w * dphi * dpsi * (dual cell volume).
double face_sum(const Grid& g, const Field& phi, const Field& psi, const FaceField& w) {
    double s = 0.0;
    const bool periodic = g.boundary() == Boundary::Periodic;
    for (int axis = 0; axis < g.dim(); ++axis) {
        const int n = g.n(axis), m = g.n(1 - axis);
        const double h = g.h(axis);
        const double face_vol = g.cell_volume();
        for (int b = 0; b < m; ++b) {
            for (int f = 0; f <= n; ++f) {
                int lo = f - 1, hi = f;
                if (f == 0 || f == n) {
                    if (!periodic) continue;
                    if (f == n) continue;  // wrapped face counted once at f == 0
                    lo = n - 1;
                }
                auto at = [&](const Field& u, int c) {
                    return axis == 0 ? u[g.index(c, b)] : u[g.index(b, c)];
                };
                const double dphi = (at(phi, hi) - at(phi, lo)) / h;
                const double dpsi = (at(psi, hi) - at(psi, lo)) / h;
                const std::size_t fi = axis == 0 ? g.face_index(0, f, b) : g.face_index(1, b, f);
                s += w.axis[axis][fi] * dphi * dpsi * face_vol;
            }
        }
    }
    return s;
}

FaceField random_weights(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 2.0);
    FaceField w(g);
    for (int a = 0; a < g.dim(); ++a)
        for (double& v : w.axis[a]) v = u(rng);
    if (g.boundary() == Boundary::Periodic) {
        // the wrapped face is stored twice; both copies must agree
        for (int j = 0; j < g.n(1); ++j) w.axis[0][g.face_index(0, g.n(0), j)] = w.axis[0][g.face_index(0, 0, j)];
        if (g.dim() == 2)
            for (int i = 0; i < g.n(0); ++i) w.axis[1][g.face_index(1, i, g.n(1))] = w.axis[1][g.face_index(1, i, 0)];
    }
    return w;
}

}  // namespace

TEST(Grid, BasicInvariants) {
    const Grid g = Grid::rect(8, 4, 2.0, 1.0);
    EXPECT_EQ(g.size(), 32u);
    EXPECT_DOUBLE_EQ(g.h(0), 0.25);
    EXPECT_DOUBLE_EQ(g.h(1), 0.25);
    EXPECT_DOUBLE_EQ(g.cell_volume(), 0.0625);
    EXPECT_DOUBLE_EQ(g.volume(), 2.0);
    const Grid l = Grid::line(10, 1.0);
    EXPECT_EQ(l.dim(), 1);
    EXPECT_EQ(l.n(1), 1);
    EXPECT_THROW(Grid::line(0, 1.0), ValidationError);
    EXPECT_THROW(Grid::line(4, -1.0), ValidationError);
}

TEST(Grid, ConstantHasZeroGradient) {
    const Grid g = Grid::rect(6, 5, 1.0, 1.0);
    const FaceField gr = gradient(Field(g, 0.3));
    for (int a = 0; a < 2; ++a)
        for (double v : gr.axis[a]) EXPECT_EQ(v, 0.0);
}

TEST(Grid, GradientStencilNeumann) {
    const Grid g = Grid::line(4, 4.0);
    const FaceField gr = gradient(Field(g, {0, 1, 2, 3}));
    ASSERT_EQ(gr.axis[0].size(), 5u);
    EXPECT_EQ(gr.axis[0][0], 0.0);
    for (int f = 1; f <= 3; ++f) EXPECT_DOUBLE_EQ(gr.axis[0][f], 1.0);
    EXPECT_EQ(gr.axis[0][4], 0.0);
}

TEST(Grid, GradientStencilPeriodic) {
    const Grid g = Grid::line(4, 4.0, Boundary::Periodic);
    const FaceField gr = gradient(Field(g, {0, 1, 0, 1}));
    // face f sits between cells f-1 and f; face 0 wraps to cell 3
    EXPECT_DOUBLE_EQ(gr.axis[0][0], -1.0);
    EXPECT_DOUBLE_EQ(gr.axis[0][1], 1.0);
    EXPECT_DOUBLE_EQ(gr.axis[0][2], -1.0);
    EXPECT_DOUBLE_EQ(gr.axis[0][3], 1.0);
}

TEST(Grid, ZeroWeightsGiveZero) {
    std::mt19937_64 rng(1);
    const Grid g = Grid::rect(7, 5, 1.0, 2.0);
    const Field r = weighted_div_grad(random_field(g, rng), FaceField(g, 0.0));
    for (double v : r.values()) EXPECT_EQ(v, 0.0);
}

TEST(Grid, LaplacianSecondOrder) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::line(n, 1.0);
        const Field phi = pflab::test::from_function(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
        const Field lap = weighted_div_grad(phi, FaceField(g, 1.0));
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double exact = -std::numbers::pi * std::numbers::pi * std::cos(std::numbers::pi * g.center(0, i));
            e = std::max(e, std::abs(lap[i] - exact));
        }
        err.push_back(e);
    }
    EXPECT_LT(err[1], 0.3 * err[0]);
    EXPECT_LT(err[2], 0.3 * err[1]);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.25);
}

TEST(Grid, DivergenceTheoremRandom) {
    std::mt19937_64 rng(2);
    for (Boundary bc : {Boundary::Neumann, Boundary::Periodic}) {
        for (const Grid& g : {Grid::line(37, 1.3, bc), Grid::rect(9, 13, 1.0, 0.7, bc)}) {
            for (int rep = 0; rep < 10; ++rep) {
                const Field r = weighted_div_grad(random_field(g, rng), random_weights(g, rng));
                double s = 0.0;
                for (double v : r.values()) s += v * g.cell_volume();
                EXPECT_NEAR(s, 0.0, 1e-13);
            }
        }
    }
}

TEST(Grid, SummationByParts) {
    std::mt19937_64 rng(3);
    for (Boundary bc : {Boundary::Neumann, Boundary::Periodic}) {
        for (const Grid& g : {Grid::line(23, 1.0, bc), Grid::rect(8, 11, 1.0, 1.5, bc)}) {
            for (int rep = 0; rep < 10; ++rep) {
                const Field phi = random_field(g, rng), psi = random_field(g, rng);
                const FaceField w = random_weights(g, rng);
                const double lhs = inner(weighted_div_grad(phi, w), psi);
                const double rhs = -face_sum(g, phi, psi, w);
                EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
            }
        }
    }
}

TEST(Grid, NeumannBoundaryFacesCarryNoFlux) {
    std::mt19937_64 rng(4);
    const Grid g = Grid::rect(6, 4, 1.0, 1.0);
    const FaceField gr = gradient(random_field(g, rng));
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(gr.axis[0][g.face_index(0, 0, j)], 0.0);
        EXPECT_EQ(gr.axis[0][g.face_index(0, 6, j)], 0.0);
    }
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(gr.axis[1][g.face_index(1, i, 0)], 0.0);
        EXPECT_EQ(gr.axis[1][g.face_index(1, i, 4)], 0.0);
    }
}

TEST(Grid, Norms) {
    EXPECT_DOUBLE_EQ(norm_l2(Field(Grid::line(17, 1.0), 1.0)), 1.0);
    EXPECT_DOUBLE_EQ(norm_h1_semi(Field(Grid::rect(5, 4, 1.0, 2.0), 0.7)), 0.0);
    EXPECT_DOUBLE_EQ(norm_l2(Field(Grid::line(2, 1.0), {1.0, -1.0})), 1.0);
    EXPECT_THROW(inner(Field(Grid::line(3, 1.0)), Field(Grid::line(4, 1.0))), ShapeMismatch);
}

TEST(Grid, HMinusOneCosine) {
    const Grid g = Grid::line(128, 1.0);
    EXPECT_EQ(norm_hminus1(Field(g, 0.0)), 0.0);
    const Field u = pflab::test::from_function(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
    const double expected = std::sqrt(0.5) / std::numbers::pi;  // v = cos(pi x) / pi^2
    EXPECT_NEAR(norm_hminus1(u), expected, 1e-3);
    EXPECT_NEAR(norm_hminus1(2.0 * u), 2.0 * norm_hminus1(u), 1e-10);
}

TEST(Grid, HMinusOneIsANorm) {
    std::mt19937_64 rng(5);
    const Grid g = Grid::rect(12, 10, 1.0, 1.0);
    auto mean_free = [&] {
        Field f = random_field(g, rng);
        f += -f.mean();
        return f;
    };
    for (int rep = 0; rep < 10; ++rep) {
        const Field a = mean_free(), b = mean_free();
        const double na = norm_hminus1(a), nb = norm_hminus1(b), nab = norm_hminus1(a + b);
        EXPECT_GT(na, 0.0);
        EXPECT_LE(nab, na + nb + 1e-9);
        EXPECT_NEAR(norm_hminus1(-3.0 * a), 3.0 * na, 1e-9);
    }
    // mean is removed before the solve
    Field c = mean_free();
    const double before = norm_hminus1(c);
    c += 0.4;
    EXPECT_NEAR(norm_hminus1(c), before, 1e-10);
}
