#pragma once

#include <random>

#include "pflab/grid.hpp"

namespace pflab::test {

inline Field random_field(const Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Field f(g);
    for (double& v : f.values()) v = u(rng);
    return f;
}

inline Field from_function(const Grid& g, double (*fn)(double, double)) {
    Field f(g);
    for (int j = 0; j < g.n(1); ++j)
        for (int i = 0; i < g.n(0); ++i)
            f[g.index(i, j)] = fn(g.center(0, i), g.dim() == 2 ? g.center(1, j) : 0.0);
    return f;
}

}  // namespace pflab::test
