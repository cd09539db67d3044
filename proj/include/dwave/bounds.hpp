#ifndef DWAVE_BOUNDS_HPP
#define DWAVE_BOUNDS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "semiflow.hpp"
#include "tangent.hpp"

namespace dwave {

/// ν_α = λ1 α / ( √(α²+4λ1) (α + √(α²+4λ1)) ).
inline double nuAlpha(double lambda1, double alpha)
{
    if (!(lambda1 > 0.0) || !(alpha > 0.0))
        throw InvalidInput("nuAlpha: lambda1 and alpha must be positive");
    double root = std::sqrt(alpha * alpha + 4.0 * lambda1);
    return lambda1 * alpha / (root * (alpha + root));
}

struct CTildeEstimate {
    double value = 0.0;
    double baseSlopeLr = 0.0; ///< ||∂_u f(·,0)||_{L^r}
    double supLinf = 0.0;     ///< sup over the sample of ||u||_∞
    double supLr = 0.0;       ///< sup over the sample of ||u||_{L^r}
    std::size_t sampleSize = 0;
    bool sampleBased = true;  ///< a sup over finitely many states underestimates the sup over the set
};

/// C̃ = ||∂_u f(·,0)||_{L^r} + C (1 + sup ||u||_∞) sup ||u||_{L^r}, sups over the sample.
inline CTildeEstimate cTilde(const NonlinearModel& model, const SpatialGrid& grid, const std::vector<State>& sample)
{
    if (sample.empty())
        throw InvalidInput("cTilde: empty sample");
    CTildeEstimate c;
    c.sampleSize = sample.size();
    c.baseSlopeLr = lpNorm(grid, model.baseSlope, model.r);
    for (const auto& U : sample) {
        if (U.u.size() != grid.size())
            throw InvalidInput("cTilde: sample state does not live on the grid");
        c.supLinf = std::max(c.supLinf, linfNorm(U.u));
        c.supLr = std::max(c.supLr, lpNorm(grid, U.u, model.r));
    }
    c.value = c.baseSlopeLr + model.C * (1.0 + c.supLinf) * c.supLr;
    return c;
}

struct BoundInputs {
    double lambda1 = 1.0;
    double alpha = 1.0;
    double r = 4.0;
    double Mr = 1.0;
    double cTilde = 0.0;

    void validate() const
    {
        if (!(lambda1 > 0.0) || !(alpha > 0.0) || !(Mr > 0.0))
            throw InvalidInput("bound inputs: lambda1, alpha and M_r must be positive");
        if (!(r > 2.0))
            throw InvalidInput("bound inputs: r must exceed 2");
        if (!(cTilde >= 0.0))
            throw InvalidInput("bound inputs: C~ must be >= 0");
    }

    /// ν_α α / (M_r^{2/r} C̃²), the right-hand side of the minimal-d condition.
    double ratio() const
    {
        double denom = std::pow(Mr, 2.0 / r) * cTilde * cTilde;
        return denom > 0.0 ? nuAlpha(lambda1, alpha) * alpha / denom : std::numeric_limits<double>::infinity();
    }
};

/// (1/d) Σ_{j<=d} j^{-2/r}.
inline double cesaroMean(std::int64_t d, double r)
{
    double s = 0.0;
    for (std::int64_t j = 1; j <= d; ++j)
        s += std::pow(static_cast<double>(j), -2.0 / r);
    return s / static_cast<double>(d);
}

struct MinimalD {
    std::int64_t d = 1;
    bool vacuous = false; ///< C̃ = 0: the condition holds trivially at d = 1
    bool capped = false;  ///< scan stopped at the cap without a hit
};

/// Smallest d >= 1 with the Cesàro mean of j^{-2/r} at or below `ratio`, by linear scan.
inline MinimalD minimalDForRatio(double ratio, double r, std::int64_t cap = 100'000'000)
{
    if (!(ratio > 0.0))
        throw InvalidInput("minimalD: right-hand side must be positive");
    MinimalD out;
    double s = 0.0;
    for (std::int64_t d = 1; d <= cap; ++d) {
        s += std::pow(static_cast<double>(d), -2.0 / r);
        if (s <= ratio * static_cast<double>(d)) {
            out.d = d;
            return out;
        }
    }
    out.d = cap;
    out.capped = true;
    return out;
}

inline MinimalD minimalD(const BoundInputs& in, std::int64_t cap = 100'000'000)
{
    in.validate();
    if (in.cTilde == 0.0) {
        MinimalD out;
        out.vacuous = true;
        return out;
    }
    return minimalDForRatio(in.ratio(), in.r, cap);
}

struct ClosedForm {
    double dimH = 0.0;
    double dimF = 0.0;
};

/// dim_H <= ( r/(r-2) M_r^{2/r} C̃² / (ν_α α) )^{r/2}, dim_F <= twice that.
inline ClosedForm closedFormForRate(double nuAlphaAlpha, double r, double Mr, double cTilde)
{
    if (!(nuAlphaAlpha > 0.0) || !(r > 2.0) || !(Mr > 0.0) || !(cTilde >= 0.0))
        throw InvalidInput("closed form: need nu_alpha alpha > 0, r > 2, M_r > 0, C~ >= 0");
    double base = r / (r - 2.0) * std::pow(Mr, 2.0 / r) * cTilde * cTilde / nuAlphaAlpha;
    ClosedForm c;
    c.dimH = std::pow(base, 0.5 * r);
    c.dimF = 2.0 * c.dimH;
    return c;
}

inline ClosedForm closedFormBound(const BoundInputs& in)
{
    in.validate();
    return closedFormForRate(nuAlpha(in.lambda1, in.alpha) * in.alpha, in.r, in.Mr, in.cTilde);
}

struct DimensionBound {
    double alpha = 0.0;
    double lambda1 = 0.0;
    double delta = 0.0;
    double nuAlpha = 0.0;
    double nuAlphaTimesAlpha = 0.0;
    double cTilde = 0.0;
    double Mr = 0.0;
    double r = 0.0;
    std::int64_t dScan = 1;
    bool vacuous = false;
    bool capped = false;
    double dClosedH = 0.0;
    double dClosedF = 0.0;
};

/// δ*, ν_α, the scanned d and the closed forms for one parameter set.
inline DimensionBound dimensionBound(const BoundInputs& in)
{
    in.validate();
    DimensionBound b;
    b.alpha = in.alpha;
    b.lambda1 = in.lambda1;
    b.delta = deltaStar(in.lambda1, in.alpha);
    b.nuAlpha = nuAlpha(in.lambda1, in.alpha);
    b.nuAlphaTimesAlpha = b.nuAlpha * in.alpha;
    b.cTilde = in.cTilde;
    b.Mr = in.Mr;
    b.r = in.r;
    auto cf = closedFormBound(in);
    b.dClosedH = cf.dimH;
    b.dClosedF = cf.dimF;
    // The closed form dominates the scan, so the scan never needs to pass it.
    std::int64_t cap = 100'000'000;
    if (std::isfinite(cf.dimH) && cf.dimH + 1.0 < static_cast<double>(cap))
        cap = static_cast<std::int64_t>(std::ceil(cf.dimH)) + 1;
    auto md = minimalD(in, std::max<std::int64_t>(cap, 1));
    b.dScan = md.d;
    b.vacuous = md.vacuous;
    b.capped = md.capped;
    return b;
}

/**
 * Bounds for the singularly perturbed family ε u_tt + u_t + A u = f: evaluate
 * at α = ε^{-1/2} with the C̃ of the rescaled attractor.
 */
inline DimensionBound epsilonFamilyBound(double epsilon, double lambda1, double r, double Mr, double cTildeRescaled)
{
    double alpha = alphaFromEpsilon(epsilon);
    return dimensionBound(BoundInputs{lambda1, alpha, r, Mr, cTildeRescaled});
}

/// Rescaled attractor samples (ǔ, ǔ_s) from ε-form samples; only velocities change.
inline std::vector<State> rescaleSample(const std::vector<State>& sample, double epsilon)
{
    std::vector<State> out;
    out.reserve(sample.size());
    for (const auto& U : sample)
        out.push_back(rescale(RescaleDirection::ToFastTime, U, epsilon));
    return out;
}

} // namespace dwave

#endif
