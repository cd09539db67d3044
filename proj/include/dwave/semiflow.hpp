#ifndef DWAVE_SEMIFLOW_HPP
#define DWAVE_SEMIFLOW_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "model.hpp"

namespace dwave {

enum class Scheme {
    LinearlyImplicitMidpoint,
};

/**
 * Time-stepping parameters for  m u_tt + α u_t + A u = f(x,u).
 *
 * `inertia` is m (1 for the standard equation, ε for the singularly
 * perturbed form). `saveEvery` controls trajectory storage density.
 */
struct IntegratorConfig {
    double dt = 1e-3;
    double T = 1.0;
    double alpha = 1.0;
    double inertia = 1.0;
    double ceiling = 1e6; ///< energy-norm blow-up threshold
    int saveEvery = 1;
    Scheme scheme = Scheme::LinearlyImplicitMidpoint;

    long steps() const { return std::lround(T / dt); }

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw InvalidInput("integrator: dt must be positive");
        if (!(alpha > 0.0))
            throw InvalidInput("integrator: alpha must be positive");
        if (!(inertia > 0.0))
            throw InvalidInput("integrator: inertia must be positive");
        if (!(T >= 0.0))
            throw InvalidInput("integrator: horizon T must be >= 0");
        if (saveEvery < 1)
            throw InvalidInput("integrator: saveEvery must be >= 1");
        if (!(ceiling > 0.0))
            throw InvalidInput("integrator: ceiling must be positive");
    }
};

/**
 * One step of the linearly implicit midpoint scheme in δ-shifted coordinates
 * (φ, ψ) = (u, v + δu).
 *
 * The linear part  φ' = ψ - δφ,  m ψ' = -(α-δ)ψ - (A - δ(α-δ))φ  is treated by
 * the implicit midpoint (Crank-Nicolson) rule; the forcing g is supplied by
 * the caller, evaluated at the explicit midpoint predictor
 * u* = φ + (dt/2)(ψ - δφ). Eliminating φ_{n+1} leaves one SPD solve per step
 * with K = (m + s(α-δ)) I + (s²/q)(A - cI), s = dt/2, q = 1 + sδ, c = δ(α-δ).
 * With δ = 0 this is the plain scheme on (u, v).
 */
class MidpointStepper {
public:
    MidpointStepper(const EllipticOperator& op, double alpha, double dt, double delta = 0.0, double inertia = 1.0)
        : alpha_(alpha), dt_(dt), delta_(delta), inertia_(inertia)
    {
        if (delta != 0.0 && inertia != 1.0)
            throw InvalidInput("MidpointStepper: shifted coordinates require unit inertia");
        s_ = 0.5 * dt;
        q_ = 1.0 + s_ * delta;
        c_ = delta * (alpha - delta);
        shifted_ = op.matrix();
        for (Index i = 0; i < shifted_.rows(); ++i)
            shifted_.coeffRef(i, i) -= c_;
        SparseMatrix K = (s_ * s_ / q_) * shifted_;
        for (Index i = 0; i < K.rows(); ++i)
            K.coeffRef(i, i) += inertia_ + s_ * (alpha_ - delta_);
        solver_.compute(K);
        if (solver_.info() != Eigen::Success)
            throw NumericalFailure("MidpointStepper: step matrix is not positive definite (reduce dt)");
    }

    double dt() const { return dt_; }
    double delta() const { return delta_; }
    double alpha() const { return alpha_; }

    /// Displacement predictor at the half step.
    Field predictor(const State& U) const { return U.u + s_ * (U.v - delta_ * U.u); }

    /// Advance U by one step with forcing g (already evaluated at the predictor).
    void advance(State& U, const Field& g) const
    {
        Field w = 2.0 * U.u + s_ * U.v;
        Field rhs = (inertia_ - s_ * (alpha_ - delta_)) * U.v - (s_ / q_) * (shifted_ * w) + dt_ * g;
        Field vNext = solver_.solve(rhs);
        U.u = ((1.0 - s_ * delta_) * U.u + s_ * (vNext + U.v)) / q_;
        U.v = std::move(vNext);
    }

private:
    double alpha_, dt_, delta_, inertia_;
    double s_ = 0.0, q_ = 1.0, c_ = 0.0;
    SparseMatrix shifted_;
    Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    IntegratorConfig config;
    bool escaped = false; ///< finite-time escape detected; the trajectory is truncated
    std::string note;

    const State& back() const { return states.back(); }
    std::size_t size() const { return states.size(); }
};

/// Base-flow forcing f(x, u*) at the half-step predictor.
inline Field midpointForcing(const MidpointStepper& stepper, const NonlinearModel& model, const State& U)
{
    return evalNemitski(model, stepper.predictor(U));
}

inline Trajectory integrate(const State& U0, const EllipticOperator& op, const NonlinearModel& model,
                            const IntegratorConfig& cfg)
{
    cfg.validate();
    if (U0.u.size() != op.size() || U0.v.size() != op.size() || model.size() != op.size())
        throw InvalidInput("integrate: state/model size does not match operator");
    if (!U0.allFinite())
        throw InvalidInput("integrate: initial state is not finite");
    MidpointStepper stepper(op, cfg.alpha, cfg.dt, 0.0, cfg.inertia);
    Trajectory traj;
    traj.config = cfg;
    traj.times.push_back(0.0);
    traj.states.push_back(U0);
    State U = U0;
    const long n = cfg.steps();
    for (long k = 1; k <= n; ++k) {
        stepper.advance(U, midpointForcing(stepper, model, U));
        double norm = U.allFinite() ? energyNorm(U, op) : std::numeric_limits<double>::infinity();
        if (!(norm <= cfg.ceiling)) {
            traj.escaped = true;
            traj.note = "finite-time escape: energy norm exceeded " + std::to_string(cfg.ceiling) + " at t=" +
                        std::to_string(k * cfg.dt);
            break;
        }
        if (k % cfg.saveEvery == 0 || k == n) {
            traj.times.push_back(k * cfg.dt);
            traj.states.push_back(U);
        }
    }
    return traj;
}

/// E(U) = ½ a(u,u) + ½ m ||v||² - ∫ F(x,u). The F term is dropped when the model has none.
inline double energy(const State& U, const EllipticOperator& op, const NonlinearModel& model, double inertia = 1.0)
{
    double e = 0.5 * op.form(U.u, U.u) + 0.5 * inertia * op.l2(U.v, U.v);
    if (model.hasAntiderivative()) {
        double pot = 0.0;
        for (Index i = 0; i < U.u.size(); ++i)
            pot += model.F(i, U.u[i]);
        e -= op.grid().cellVolume() * pot;
    }
    return e;
}

/// Instantaneous energy rate predicted by the energy identity, -α ||v||².
inline double energyRate(const State& U, const EllipticOperator& op, double alpha) { return -alpha * op.l2(U.v, U.v); }

enum class RescaleDirection {
    ToFastTime, ///< (u, u_t) of ε u_tt + u_t + ... to (ǔ, ǔ_s), s = t / √ε
    ToSlowTime, ///< inverse map
};

/// Velocity-only rescaling between the ε-form and the α = ε^{-1/2} form.
inline State rescale(RescaleDirection dir, const State& U, double epsilon)
{
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw InvalidInput("rescale: epsilon must lie in (0, 1]");
    double k = std::sqrt(epsilon);
    State out = U;
    if (dir == RescaleDirection::ToFastTime)
        out.v *= k;
    else
        out.v /= k;
    return out;
}

inline double alphaFromEpsilon(double epsilon)
{
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw InvalidInput("epsilon must lie in (0, 1]");
    return 1.0 / std::sqrt(epsilon);
}

struct SupNorms {
    double linf = 0.0;
    double lr = 0.0;
    double h10 = 0.0;
    double l2v = 0.0;
};

struct InvariantSample {
    std::vector<State> states;
    std::vector<double> times;
    SupNorms sup;
};

inline SupNorms supNorms(const std::vector<State>& states, const EllipticOperator& op, double r)
{
    SupNorms s;
    for (const auto& U : states) {
        s.linf = std::max(s.linf, linfNorm(U.u));
        s.lr = std::max(s.lr, lpNorm(op.grid(), U.u, r));
        s.h10 = std::max(s.h10, op.h10Norm(U.u));
        s.l2v = std::max(s.l2v, l2Norm(op.grid(), U.v));
    }
    return s;
}

/**
 * Post-transient samples approximating the invariant set reached from U0.
 * Integrates to `burnIn`, then records `sampleCount` states `stride` apart.
 */
inline InvariantSample sampleInvariantSet(const EllipticOperator& op, const NonlinearModel& model,
                                          const IntegratorConfig& cfg, const State& U0, double burnIn,
                                          int sampleCount, double stride)
{
    if (sampleCount < 1 || !(stride > 0.0) || !(burnIn >= 0.0))
        throw InvalidInput("sampleInvariantSet: need sampleCount >= 1, stride > 0, burnIn >= 0");
    IntegratorConfig c = cfg;
    c.validate();
    long strideSteps = std::max(1L, std::lround(stride / cfg.dt));
    long burnSteps = std::lround(burnIn / cfg.dt);
    c.saveEvery = 1;
    MidpointStepper stepper(op, c.alpha, c.dt, 0.0, c.inertia);
    InvariantSample out;
    State U = U0;
    const long total = burnSteps + (sampleCount - 1) * strideSteps;
    for (long k = 0; k <= total; ++k) {
        if (k > 0) {
            stepper.advance(U, midpointForcing(stepper, model, U));
            if (!U.allFinite() || energyNorm(U, op) > c.ceiling)
                throw NumericalFailure("sampleInvariantSet: finite-time escape at t=" + std::to_string(k * c.dt) +
                                       (k <= burnSteps ? " during burn-in" : " during sampling"));
        }
        if (k >= burnSteps && (k - burnSteps) % strideSteps == 0) {
            out.states.push_back(U);
            out.times.push_back(k * c.dt);
        }
    }
    out.sup = supNorms(out.states, op, model.r);
    return out;
}

} // namespace dwave

#endif
