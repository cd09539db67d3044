#ifndef DWAVE_GRID_HPP
#define DWAVE_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace dwave {

/// Scalar field sampled at the interior grid nodes.
using Field = Eigen::VectorXd;
using Index = Eigen::Index;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

/**
 * Uniform box grid with homogeneous Dirichlet boundary.
 *
 * Only interior nodes carry unknowns. Along axis k there are n[k] nodes at
 * lo + (i+1) h[k], i = 0..n[k]-1, with h[k] = length / (n[k]+1).
 * Nodes are enumerated lexicographically with the x axis varying fastest:
 * index = i0 + n0 * (i1 + n1 * i2).
 */
class SpatialGrid {
public:
    SpatialGrid() = default;

    SpatialGrid(std::vector<Interval> extent, std::vector<int> n)
    {
        if (extent.empty() || extent.size() > 3 || extent.size() != n.size())
            throw InvalidInput("grid: need 1 to 3 axes with one point count per axis");
        dim_ = static_cast<int>(extent.size());
        for (int k = 0; k < dim_; ++k) {
            if (n[k] < 1)
                throw InvalidInput("grid: interior point count must be >= 1 on every axis");
            if (!(extent[k].hi > extent[k].lo) || !std::isfinite(extent[k].lo) || !std::isfinite(extent[k].hi))
                throw InvalidInput("grid: axis interval must be finite with hi > lo");
            extent_[k] = extent[k];
            n_[k] = n[k];
            h_[k] = extent[k].length() / (n[k] + 1);
        }
        for (int k = dim_; k < 3; ++k) {
            extent_[k] = Interval{0.0, 0.0};
            n_[k] = 1;
            h_[k] = 1.0;
        }
    }

    /// 1D convenience constructor on (lo, hi).
    static SpatialGrid line(double lo, double hi, int n) { return SpatialGrid({Interval{lo, hi}}, {n}); }

    /// Cube [lo,hi]^dim with the same count on every axis.
    static SpatialGrid cube(int dim, double lo, double hi, int n)
    {
        return SpatialGrid(std::vector<Interval>(static_cast<std::size_t>(dim), Interval{lo, hi}),
                           std::vector<int>(static_cast<std::size_t>(dim), n));
    }

    int dim() const { return dim_; }
    int n(int axis) const { return n_[axis]; }
    double h(int axis) const { return h_[axis]; }
    const Interval& extent(int axis) const { return extent_[axis]; }

    Index size() const { return static_cast<Index>(n_[0]) * n_[1] * n_[2]; }

    /// Quadrature weight of one node (product of spacings).
    double cellVolume() const
    {
        double w = 1.0;
        for (int k = 0; k < dim_; ++k)
            w *= h_[k];
        return w;
    }

    Index index(int i0, int i1 = 0, int i2 = 0) const
    {
        return static_cast<Index>(i0) + static_cast<Index>(n_[0]) * (i1 + static_cast<Index>(n_[1]) * i2);
    }

    std::array<int, 3> multiIndex(Index idx) const
    {
        std::array<int, 3> m{};
        m[0] = static_cast<int>(idx % n_[0]);
        idx /= n_[0];
        m[1] = static_cast<int>(idx % n_[1]);
        m[2] = static_cast<int>(idx / n_[1]);
        return m;
    }

    double coordinate(int axis, int i) const { return extent_[axis].lo + (i + 1) * h_[axis]; }

    std::array<double, 3> point(Index idx) const
    {
        auto m = multiIndex(idx);
        std::array<double, 3> x{};
        for (int k = 0; k < dim_; ++k)
            x[k] = coordinate(k, m[k]);
        return x;
    }

    std::array<double, 3> center() const
    {
        std::array<double, 3> c{};
        for (int k = 0; k < dim_; ++k)
            c[k] = 0.5 * (extent_[k].lo + extent_[k].hi);
        return c;
    }

    bool sameAs(const SpatialGrid& o) const
    {
        if (dim_ != o.dim_)
            return false;
        for (int k = 0; k < dim_; ++k)
            if (n_[k] != o.n_[k] || extent_[k].lo != o.extent_[k].lo || extent_[k].hi != o.extent_[k].hi)
                return false;
        return true;
    }

    /// Sample a function of the node position.
    template <class Fn>
    Field sample(Fn&& fn) const
    {
        Field out(size());
        for (Index i = 0; i < size(); ++i)
            out[i] = fn(point(i));
        return out;
    }

private:
    int dim_ = 1;
    std::array<Interval, 3> extent_{};
    std::array<int, 3> n_{1, 1, 1};
    std::array<double, 3> h_{1.0, 1.0, 1.0};
};

/// Potential values (units 1/time^2) with the uniform-Lebesgue exponent they are measured in.
struct PotentialField {
    Field values;
    double sigma = 2.0;

    static PotentialField constant(const SpatialGrid& grid, double c, double sigma = 2.0)
    {
        return PotentialField{Field::Constant(grid.size(), c), sigma};
    }

    void validate(const SpatialGrid& grid) const
    {
        if (values.size() != grid.size())
            throw InvalidInput("potential: size does not match grid");
        if (!(sigma > 1.5))
            throw InvalidInput("potential: uniform-Lebesgue exponent sigma must exceed 3/2");
        for (Index i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i]))
                throw InvalidInput("potential: non-finite value at node " + std::to_string(i));
    }
};

// Discrete norms, all with the midpoint weight h^dim.

inline double l2Inner(const SpatialGrid& grid, const Field& a, const Field& b) { return grid.cellVolume() * a.dot(b); }

inline double l2Norm(const SpatialGrid& grid, const Field& a) { return std::sqrt(l2Inner(grid, a, a)); }

inline double lpNorm(const SpatialGrid& grid, const Field& a, double p)
{
    double s = 0.0;
    for (Index i = 0; i < a.size(); ++i)
        s += std::pow(std::abs(a[i]), p);
    return std::pow(grid.cellVolume() * s, 1.0 / p);
}

inline double linfNorm(const Field& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// Read one value per line (blank lines and '#' comments skipped) in interior-index order.
inline Field loadField(const std::string& path, const SpatialGrid& grid)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open field file '" + path + "'");
    std::vector<double> vals;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        double v;
        if (!(ls >> v)) {
            std::string rest;
            if (std::istringstream(line) >> rest)
                throw InvalidInput(path + ":" + std::to_string(lineNo) + ": not a number");
            continue;
        }
        vals.push_back(v);
    }
    if (static_cast<Index>(vals.size()) != grid.size())
        throw InvalidInput(path + ": expected " + std::to_string(grid.size()) + " values, found " +
                           std::to_string(vals.size()));
    return Eigen::Map<Field>(vals.data(), static_cast<Index>(vals.size()));
}

} // namespace dwave

#endif
