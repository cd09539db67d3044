#ifndef DWAVE_MODEL_HPP
#define DWAVE_MODEL_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <limits>
#include <string>

#include "elliptic.hpp"

namespace dwave {

/// Pointwise scalar function of (node index, u).
using PointwiseFn = std::function<double(Index, double)>;

/**
 * Nonlinearity f(x,u) with its u-derivatives and growth data.
 *
 * `C` bounds the second derivative, |∂_uu f| <= C (1 + |u|); `baseSlope` is
 * ∂_u f(x,0); `r` > 3 is the integrability exponent of the base slope.
 * `F` is the antiderivative in u and is optional (needed for energies and
 * dissipativity checks).
 */
struct NonlinearModel {
    std::string name;
    PointwiseFn f;
    PointwiseFn dfu;
    PointwiseFn dfuu;
    PointwiseFn F;
    double C = 0.0;
    Field baseSlope;
    double r = 4.0;

    bool hasAntiderivative() const { return static_cast<bool>(F); }
    Index size() const { return baseSlope.size(); }
};

/// f = a u - b u^3 (a, b constants).
inline NonlinearModel cubicModel(Index size, double a, double b, double r = 4.0)
{
    NonlinearModel m;
    m.name = "cubic";
    m.f = [a, b](Index, double u) { return a * u - b * u * u * u; };
    m.dfu = [a, b](Index, double u) { return a - 3.0 * b * u * u; };
    m.dfuu = [b](Index, double u) { return -6.0 * b * u; };
    m.F = [a, b](Index, double u) { return 0.5 * a * u * u - 0.25 * b * u * u * u * u; };
    m.C = 6.0 * std::abs(b);
    m.baseSlope = Field::Constant(size, a);
    m.r = r;
    return m;
}

/// f = g(x) u - u^3 with a node field g.
inline NonlinearModel xCubicModel(const Field& g, double r = 4.0)
{
    NonlinearModel m;
    m.name = "xcubic";
    auto gp = std::make_shared<const Field>(g);
    m.f = [gp](Index i, double u) { return (*gp)[i] * u - u * u * u; };
    m.dfu = [gp](Index i, double u) { return (*gp)[i] - 3.0 * u * u; };
    m.dfuu = [](Index, double u) { return -6.0 * u; };
    m.F = [gp](Index i, double u) { return 0.5 * (*gp)[i] * u * u - 0.25 * u * u * u * u; };
    m.C = 6.0;
    m.baseSlope = g;
    m.r = r;
    return m;
}

inline NonlinearModel zeroModel(Index size, double r = 4.0)
{
    NonlinearModel m;
    m.name = "zero";
    m.f = [](Index, double) { return 0.0; };
    m.dfu = [](Index, double) { return 0.0; };
    m.dfuu = [](Index, double) { return 0.0; };
    m.F = [](Index, double) { return 0.0; };
    m.C = 0.0;
    m.baseSlope = Field::Zero(size);
    m.r = r;
    return m;
}

/// Pointwise f(x, u(x)).
inline Field evalNemitski(const NonlinearModel& model, const Field& u)
{
    if (u.size() != model.size())
        throw InvalidInput("evalNemitski: field size does not match model");
    Field out(u.size());
    for (Index i = 0; i < u.size(); ++i) {
        if (!std::isfinite(u[i]))
            throw InvalidInput("evalNemitski: non-finite input at node " + std::to_string(i));
        out[i] = model.f(i, u[i]);
        if (!std::isfinite(out[i]))
            throw NumericalFailure("evalNemitski: non-finite value of f at node " + std::to_string(i));
    }
    return out;
}

/// Pointwise ∂_u f(x, u(x)).
inline Field evalSlope(const NonlinearModel& model, const Field& u)
{
    Field out(u.size());
    for (Index i = 0; i < u.size(); ++i)
        out[i] = model.dfu(i, u[i]);
    return out;
}

/// Growth monitor ||f(u)||_{L2} / (1 + ||u||^3_{H1_0}).
inline double nemitskiGrowthRatio(const NonlinearModel& model, const Field& u, const EllipticOperator& op)
{
    double num = l2Norm(op.grid(), evalNemitski(model, u));
    return num / (1.0 + std::pow(op.h10Norm(u), 3));
}

/// Hyp 3(1): the base slope must be nonnegative.
inline void requireNonnegativeBaseSlope(const NonlinearModel& model)
{
    for (Index i = 0; i < model.baseSlope.size(); ++i)
        if (model.baseSlope[i] < 0.0)
            throw HypothesisViolation("Hypothesis 3(1) (d_u f(x,0) >= 0)",
                                      "base slope is " + std::to_string(model.baseSlope[i]) + " at node " +
                                          std::to_string(i) + "; absorb its negative part into beta");
}

/// Unit-amplitude Gaussian exp(-|x - x0|^2) centered in the box.
inline Field gaussianProfile(const SpatialGrid& grid)
{
    auto c = grid.center();
    return grid.sample([&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int k = 0; k < grid.dim(); ++k)
            r2 += (x[k] - c[k]) * (x[k] - c[k]);
        return std::exp(-r2);
    });
}

struct WeightPotential {
    Field values;
    double epsilon = 0.0;
    Field rho;

    Index size() const { return values.size(); }
    bool strictlyPositive() const { return values.size() > 0 && values.minCoeff() > 0.0; }

    static WeightPotential constant(Index size, double w)
    {
        return WeightPotential{Field::Constant(size, w), 0.0, Field::Zero(size)};
    }
};

/// W(x) = ∂_u f(x,0) + C (1 + ||ũ||_∞) |ũ(x)| + ε ρ(x).
inline WeightPotential buildWeight(const NonlinearModel& model, const SpatialGrid& grid, const Field& uTilde,
                                   double epsilon)
{
    if (!(epsilon >= 0.0))
        throw InvalidInput("buildWeight: epsilon must be >= 0");
    if (uTilde.size() != grid.size() || model.size() != grid.size())
        throw InvalidInput("buildWeight: field size does not match grid");
    requireNonnegativeBaseSlope(model);
    WeightPotential w;
    w.epsilon = epsilon;
    w.rho = gaussianProfile(grid);
    double sup = linfNorm(uTilde);
    w.values = model.baseSlope + model.C * (1.0 + sup) * uTilde.cwiseAbs() + epsilon * w.rho;
    return w;
}

struct DissipativeData {
    double mu = 1.0;
    Field c;
};

struct DissipativityVerdict {
    bool pass = false;
    double maxMargin = -std::numeric_limits<double>::infinity();     ///< max of f u - mu F - c
    double maxPotential = -std::numeric_limits<double>::infinity();  ///< max of F - c
    Index worstNode = 0;
    double worstU = 0.0;
};

/**
 * Lattice scan of the dissipativity structure f u - μ F <= c and F <= c.
 * Every node is paired with `samples` equispaced u values in [uLo, uHi].
 */
inline DissipativityVerdict checkDissipativity(const NonlinearModel& model, const DissipativeData& data, double uLo,
                                               double uHi, int samples = 2001)
{
    if (!model.hasAntiderivative())
        throw InvalidInput("dissipative checks unavailable: model has no antiderivative F");
    if (!(data.mu > 0.0))
        throw InvalidInput("checkDissipativity: mu must be positive");
    if (data.c.size() != model.size())
        throw InvalidInput("checkDissipativity: c field size does not match model");
    if (!(uHi >= uLo) || samples < 2)
        throw InvalidInput("checkDissipativity: bad u range");
    DissipativityVerdict out;
    double worst = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < model.size(); ++i)
        for (int s = 0; s < samples; ++s) {
            double u = uLo + (uHi - uLo) * s / (samples - 1);
            double F = model.F(i, u);
            double m1 = model.f(i, u) * u - data.mu * F - data.c[i];
            double m2 = F - data.c[i];
            out.maxMargin = std::max(out.maxMargin, m1);
            out.maxPotential = std::max(out.maxPotential, m2);
            if (std::max(m1, m2) > worst) {
                worst = std::max(m1, m2);
                out.worstNode = i;
                out.worstU = u;
            }
        }
    out.pass = out.maxMargin <= 0.0 && out.maxPotential <= 0.0;
    return out;
}

} // namespace dwave

#endif
