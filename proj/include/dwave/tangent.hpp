#ifndef DWAVE_TANGENT_HPP
#define DWAVE_TANGENT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "semiflow.hpp"

namespace dwave {

/// Coordinate change R_δ: (u, v) -> (u, v + δu). Its inverse is R_{-δ}.
struct ShiftTransform {
    double delta = 0.0;

    State apply(const State& U) const { return State{U.u, U.v + delta * U.u}; }
    ShiftTransform inverse() const { return ShiftTransform{-delta}; }
    ShiftTransform then(const ShiftTransform& next) const { return ShiftTransform{delta + next.delta}; }
};

inline State shift(const ShiftTransform& t, const State& U) { return t.apply(U); }

/// δ* = λ1 α / (α² + 4 λ1).
inline double deltaStar(double lambda1, double alpha)
{
    if (!(lambda1 > 0.0) || !(alpha > 0.0))
        throw InvalidInput("deltaStar: lambda1 and alpha must be positive");
    return lambda1 * alpha / (alpha * alpha + 4.0 * lambda1);
}

/// d tangent directions plus the log of the d-volume accumulated by re-orthonormalization.
struct TangentFrame {
    std::vector<State> directions;
    bool orthonormal = false;
    double logVolume = 0.0;

    int d() const { return static_cast<int>(directions.size()); }
};

inline Eigen::MatrixXd gramMatrix(const std::vector<State>& dirs, const EllipticOperator& op)
{
    const auto d = static_cast<Index>(dirs.size());
    Eigen::MatrixXd G(d, d);
    std::vector<Field> Au;
    Au.reserve(dirs.size());
    for (const auto& p : dirs)
        Au.push_back(op.apply(p.u));
    const double w = op.grid().cellVolume();
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j) {
            const auto& a = dirs[static_cast<std::size_t>(i)];
            const auto& b = dirs[static_cast<std::size_t>(j)];
            G(i, j) = G(j, i) = w * (a.u.dot(Au[static_cast<std::size_t>(j)]) + a.v.dot(b.v));
        }
    return G;
}

/// ½ log det Gram, via Cholesky.
inline double halfLogGram(const std::vector<State>& dirs, const EllipticOperator& op)
{
    Eigen::LLT<Eigen::MatrixXd> llt(gramMatrix(dirs, op));
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("Gram matrix lost positive definiteness (frame collapse)");
    const Eigen::MatrixXd& L = llt.matrixLLT();
    double s = 0.0;
    for (Index i = 0; i < L.rows(); ++i)
        s += std::log(L(i, i));
    return s;
}

/**
 * Modified Gram-Schmidt in the Z0 energy product. Returns Σ log r_ii, the
 * log of the d-volume spanned before normalization.
 */
inline double orthonormalize(std::vector<State>& dirs, const EllipticOperator& op, double collapseTol = 1e-14)
{
    double logVol = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double c = energyInner(dirs[i], dirs[j], op);
            dirs[i].u -= c * dirs[j].u;
            dirs[i].v -= c * dirs[j].v;
        }
        double r = energyNorm(dirs[i], op);
        if (!(r >= collapseTol))
            throw NumericalFailure("frame collapse: QR diagonal entry " + std::to_string(r) + " at direction " +
                                   std::to_string(i) + "; use a smaller re-orthonormalization interval");
        dirs[i] *= 1.0 / r;
        logVol += std::log(r);
    }
    return logVol;
}

/// Orthonormal copy of a frame; rejects empty, zero or dependent input.
inline TangentFrame orthonormalFrame(std::vector<State> dirs, const EllipticOperator& op)
{
    if (dirs.empty())
        throw InvalidInput("tangent frame needs d >= 1 directions");
    double logNorms = 0.0;
    for (const auto& p : dirs) {
        if (p.u.size() != op.size() || p.v.size() != op.size())
            throw InvalidInput("tangent frame: direction does not live on the operator's grid");
        double n = energyNorm(p, op);
        if (!(n > 0.0) || !std::isfinite(n))
            throw InvalidInput("tangent frame: zero or non-finite direction, directions are not independent");
        logNorms += std::log(n);
    }
    TangentFrame f;
    double logVol = orthonormalize(dirs, op, 0.0);
    // Volume relative to the product of lengths; tiny means numerically dependent.
    if (!std::isfinite(logVol) || logVol - logNorms < std::log(1e-12))
        throw InvalidInput("tangent frame: directions are not linearly independent");
    f.directions = std::move(dirs);
    f.orthonormal = true;
    return f;
}

/// Frozen base point for evaluating the trace form: ũ, δ, α and ∂_u f(ũ).
struct TraceContext {
    Field uTilde;
    double delta = 0.0;
    double alpha = 1.0;
    Field slope;
};

inline TraceContext makeTraceContext(const NonlinearModel& model, const Field& uTilde, double delta, double alpha)
{
    if (!(alpha > 0.0) || !(delta > 0.0) || !(delta < alpha))
        throw InvalidInput("trace context: need 0 < delta < alpha");
    if (uTilde.size() != model.size())
        throw InvalidInput("trace context: base state size does not match model");
    return TraceContext{uTilde, delta, alpha, evalSlope(model, uTilde)};
}

/// Symmetric trace form B(Φ, Ξ) of the shifted linearized flow.
inline double traceForm(const TraceContext& ctx, const State& a, const State& b, const EllipticOperator& op)
{
    const double d = ctx.delta, am = ctx.alpha - d;
    return -2.0 * d * op.form(a.u, b.u) - 2.0 * am * op.l2(a.v, b.v) +
           d * am * (op.l2(a.u, b.v) + op.l2(a.v, b.u)) + op.l2(ctx.slope.cwiseProduct(a.u), b.v) +
           op.l2(a.v, ctx.slope.cwiseProduct(b.u));
}

inline void requireOrthonormal(const TangentFrame& frame, const EllipticOperator& op, double tol = 1e-8)
{
    if (frame.directions.empty())
        throw InvalidInput("frame is empty");
    Eigen::MatrixXd G = gramMatrix(frame.directions, op);
    double dev = (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
    if (!(dev <= tol))
        throw InvalidInput("frame is not orthonormal in Z0 (Gram deviation " + std::to_string(dev) + ")");
}

/// Tr B over span(frame) for an orthonormal frame.
inline double traceB(const TraceContext& ctx, const TangentFrame& frame, const EllipticOperator& op)
{
    requireOrthonormal(frame, op);
    double t = 0.0;
    for (const auto& p : frame.directions)
        t += traceForm(ctx, p, p, op);
    return t;
}

/// Tr B over span(dirs) for arbitrary independent directions: tr(G^{-1} B).
inline double traceBSpan(const TraceContext& ctx, const std::vector<State>& dirs, const EllipticOperator& op)
{
    const auto d = static_cast<Index>(dirs.size());
    Eigen::MatrixXd G = gramMatrix(dirs, op);
    Eigen::MatrixXd B(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j)
            B(i, j) = B(j, i) =
                traceForm(ctx, dirs[static_cast<std::size_t>(i)], dirs[static_cast<std::size_t>(j)], op);
    return G.llt().solve(B).trace();
}

/**
 * Spectrum of the operator realizing the trace form on the discrete Z0,
 * i.e. the pencil (B, M) with M = diag(A, I), sorted descending.
 */
inline Eigen::VectorXd traceOperatorSpectrum(const TraceContext& ctx, const EllipticOperator& op)
{
    const Index n = op.size();
    if (ctx.slope.size() != n)
        throw InvalidInput("trace context does not match operator size");
    Eigen::MatrixXd A = op.dense();
    const double d = ctx.delta, am = ctx.alpha - d;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    B.topLeftCorner(n, n) = -2.0 * d * A;
    B.bottomRightCorner(n, n).diagonal().setConstant(-2.0 * am);
    Eigen::VectorXd cross = ctx.slope.array() + d * am;
    B.topRightCorner(n, n).diagonal() = cross;
    B.bottomLeftCorner(n, n).diagonal() = cross;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = A;
    M.bottomRightCorner(n, n).setIdentity();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("trace operator eigensolver failed (is A positive definite?)");
    return es.eigenvalues().reverse();
}

/// p_j(Ũ): sup of Tr B over j-dimensional subspaces = sum of the j largest eigenvalues.
inline double kyFanSup(const TraceContext& ctx, const EllipticOperator& op, int j)
{
    if (j < 1 || j > 2 * op.size())
        throw InvalidInput("kyFanSup: j out of range [1, 2N]");
    return traceOperatorSpectrum(ctx, op).head(j).sum();
}

/// Partial sums p_1..p_J from one eigen solve.
inline Eigen::VectorXd kyFanProfile(const TraceContext& ctx, const EllipticOperator& op, int J)
{
    if (J < 1 || J > 2 * op.size())
        throw InvalidInput("kyFanProfile: J out of range [1, 2N]");
    Eigen::VectorXd ev = traceOperatorSpectrum(ctx, op);
    Eigen::VectorXd p(J);
    double s = 0.0;
    for (int i = 0; i < J; ++i)
        p[i] = (s += ev[i]);
    return p;
}

/// -2 ν_α d + (1/α) Σ ||m φ_i||², for a multiplier m (the slope or a weight dominating it).
inline double traceUpperBoundWith(const TraceContext& ctx, const TangentFrame& frame, const EllipticOperator& op,
                                  double nuAlpha, double lambda1, const Field& multiplier)
{
    double ds = deltaStar(lambda1, ctx.alpha);
    if (std::abs(ctx.delta - ds) > 1e-12 * ds)
        throw InvalidInput("traceUpperBound: the inequality requires delta = deltaStar(lambda1, alpha)");
    requireOrthonormal(frame, op);
    double s = 0.0;
    for (const auto& p : frame.directions) {
        Field m = multiplier.cwiseProduct(p.u);
        s += op.l2(m, m);
    }
    return -2.0 * nuAlpha * frame.d() + s / ctx.alpha;
}

inline double traceUpperBound(const TraceContext& ctx, const TangentFrame& frame, const EllipticOperator& op,
                              double nuAlpha, double lambda1)
{
    return traceUpperBoundWith(ctx, frame, op, nuAlpha, lambda1, ctx.slope);
}

struct TangentConfig {
    int qrInterval = 10;  ///< steps between re-orthonormalizations; 0 disables them
    double delta = 0.0;   ///< coordinate shift the frame lives in
};

struct TangentResult {
    TangentFrame frame;
    std::vector<double> times;
    std::vector<double> logVolume; ///< ½ log G(t) with G(0) = 1
};

/// Called after every step with (time, current directions, base state at that time).
using TangentObserver = std::function<void(double, const std::vector<State>&, const State&)>;

/**
 * Evolve d tangent directions along a stored base trajectory.
 *
 * The directions live in δ-shifted coordinates. Each step applies the exact
 * linearization of the base scheme: forcing ∂_u f(ū*) φ*, with ū* the base
 * predictor and φ* the tangent predictor. The base trajectory must be stored
 * at every step (saveEvery = 1).
 */
inline TangentResult evolveTangent(const Trajectory& base, const TangentFrame& frame0, const EllipticOperator& op,
                                   const NonlinearModel& model, const TangentConfig& cfg,
                                   const TangentObserver& observer = {})
{
    if (base.config.saveEvery != 1)
        throw InvalidInput("evolveTangent: base trajectory must be stored at every step");
    if (base.states.size() < 1)
        throw InvalidInput("evolveTangent: empty base trajectory");
    if (cfg.qrInterval < 0)
        throw InvalidInput("evolveTangent: qrInterval must be >= 0");
    const auto& ic = base.config;
    MidpointStepper baseStepper(op, ic.alpha, ic.dt, 0.0, ic.inertia);
    MidpointStepper tanStepper(op, ic.alpha, ic.dt, cfg.delta, ic.inertia);

    TangentResult out;
    out.frame = frame0;
    std::vector<State>& dirs = out.frame.directions;
    if (dirs.empty())
        throw InvalidInput("evolveTangent: frame needs d >= 1 directions");
    double accumulated = 0.0;
    if (cfg.qrInterval > 0) {
        // Start from an orthonormal frame so that G(0) = 1.
        out.frame = orthonormalFrame(dirs, op);
    } else {
        orthonormalFrame(dirs, op); // independence check only
        accumulated = -halfLogGram(dirs, op);
    }
    out.times.push_back(base.times.front());
    out.logVolume.push_back(0.0);
    if (observer)
        observer(base.times.front(), dirs, base.states.front());

    for (std::size_t k = 0; k + 1 < base.states.size(); ++k) {
        Field slope = evalSlope(model, baseStepper.predictor(base.states[k]));
        for (auto& p : dirs) {
            Field g = slope.cwiseProduct(tanStepper.predictor(p));
            tanStepper.advance(p, g);
        }
        const auto step = static_cast<long>(k + 1);
        bool qr = cfg.qrInterval > 0 && step % cfg.qrInterval == 0;
        if (qr)
            accumulated += orthonormalize(dirs, op);
        double lv = qr ? accumulated : accumulated + halfLogGram(dirs, op);
        out.times.push_back(base.times[k + 1]);
        out.logVolume.push_back(lv);
        if (observer)
            observer(base.times[k + 1], dirs, base.states[k + 1]);
    }
    out.frame.orthonormal = (cfg.qrInterval > 0 && (base.states.size() - 1) % cfg.qrInterval == 0);
    out.frame.logVolume = out.logVolume.back();
    return out;
}

} // namespace dwave

#endif
