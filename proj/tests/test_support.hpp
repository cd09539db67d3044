#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <dwave/elliptic.hpp>

namespace dwave::testing {

inline Field randomField(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Field f(n);
    for (Index i = 0; i < n; ++i)
        f[i] = dist(rng);
    return f;
}

inline Field gaussianField(std::mt19937_64& rng, Index n)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    Field f(n);
    for (Index i = 0; i < n; ++i)
        f[i] = dist(rng);
    return f;
}

/// Random combination of the first `modes` Dirichlet sine modes on a 1D grid.
inline Field smoothField(std::mt19937_64& rng, const SpatialGrid& grid, int modes, double amplitude = 1.0)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    const double L = grid.extent(0).length();
    Field f = Field::Zero(grid.size());
    for (int m = 1; m <= modes; ++m) {
        double c = amplitude * dist(rng) / m;
        for (Index i = 0; i < grid.size(); ++i) {
            double x = grid.point(i)[0] - grid.extent(0).lo;
            f[i] += c * std::sin(m * std::numbers::pi * x / L);
        }
    }
    return f;
}

/// Sine mode sin(m π (x - lo)/L) on a 1D grid, L2-normalized.
inline Field sineMode(const SpatialGrid& grid, int m)
{
    const double L = grid.extent(0).length();
    Field f = grid.sample([&](const std::array<double, 3>& x) {
        return std::sin(m * std::numbers::pi * (x[0] - grid.extent(0).lo) / L);
    });
    return f / l2Norm(grid, f);
}

/// Sturm-sequence count of eigenvalues < x of a symmetric tridiagonal matrix.
inline int sturmCount(const std::vector<double>& diag, const std::vector<double>& off, double x)
{
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        double b2 = i == 0 ? 0.0 : off[i - 1] * off[i - 1];
        q = diag[i] - x - (i == 0 ? 0.0 : b2 / q);
        if (q == 0.0)
            q = 1e-300;
        if (q < 0.0)
            ++count;
    }
    return count;
}

/// k-th smallest eigenvalue (0-based) of a tridiagonal matrix by bisection.
inline double sturmEigenvalue(const std::vector<double>& diag, const std::vector<double>& off, int k)
{
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < diag.size() ? std::abs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturmCount(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace dwave::testing
