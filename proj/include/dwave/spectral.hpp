#ifndef DWAVE_SPECTRAL_HPP
#define DWAVE_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "model.hpp"

namespace dwave {

/// A φ = λ W² φ on the grid of `op`.
struct WeightedProblem {
    EllipticOperator op;
    WeightPotential weight;
};

/// Ascending weighted eigenvalues and their reciprocals.
struct SpectralReport {
    Eigen::VectorXd lambdas; ///< ascending
    Eigen::VectorXd mus;     ///< mus[j] = 1 / lambdas[j], descending
    int k = 0;
};

namespace detail {

inline void requireNondegenerate(const WeightedProblem& p)
{
    if (p.weight.size() != p.op.size())
        throw InvalidInput("weighted problem: weight size does not match operator");
    if (!p.weight.strictlyPositive())
        throw InvalidInput("degenerate weighted metric: W vanishes somewhere; use epsilon > 0 so that W = W_U + "
                           "epsilon*rho is strictly positive");
}

inline void requireK(const WeightedProblem& p, int k)
{
    if (k < 1 || k > p.op.size())
        throw InvalidInput("spectral: k must lie in [1, N]");
}

inline SpectralReport makeReport(const Eigen::VectorXd& ascending, int k)
{
    SpectralReport r;
    r.k = k;
    r.lambdas = ascending.head(k);
    r.mus = r.lambdas.cwiseInverse();
    return r;
}

} // namespace detail

/**
 * Lowest k eigenvalues of the weighted problem. W is diagonal and positive,
 * so the pencil (A, W²) is reduced to the symmetric matrix W^{-1} A W^{-1}.
 * The h^dim quadrature weights appear on both sides and cancel.
 */
inline SpectralReport solveWeighted(const WeightedProblem& p, int k)
{
    detail::requireNondegenerate(p);
    detail::requireK(p, k);
    Eigen::VectorXd winv = p.weight.values.cwiseInverse();
    Eigen::MatrixXd S = winv.asDiagonal() * p.op.dense() * winv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("solveWeighted: eigensolver did not converge");
    return detail::makeReport(es.eigenvalues(), k);
}

/// Eigenvectors too, as nodal fields in the columns (W²-orthonormal).
inline std::pair<SpectralReport, Eigen::MatrixXd> solveWeightedWithVectors(const WeightedProblem& p, int k)
{
    detail::requireNondegenerate(p);
    detail::requireK(p, k);
    Eigen::VectorXd winv = p.weight.values.cwiseInverse();
    Eigen::MatrixXd S = winv.asDiagonal() * p.op.dense() * winv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("solveWeighted: eigensolver did not converge");
    Eigen::MatrixXd vecs = winv.asDiagonal() * es.eigenvectors().leftCols(k);
    return {detail::makeReport(es.eigenvalues(), k), vecs};
}

struct OperatorSpectrum {
    SpectralReport report;
    double maxVelocityComponent = 0.0; ///< largest |ψ| entry over nonzero-eigenvalue eigenvectors (Z0-normalized)
    int nonzeroCount = 0;
};

/**
 * Nonzero spectrum of S*S on the discrete Z0, S(u,v) = (0, W u).
 *
 * <S*S U, U'>_{Z0} = <W u, W u'>_{L2}, so the eigenproblem is the pencil
 * (diag(W², 0), diag(A, I)) of size 2N. Exactly N eigenvalues are nonzero.
 */
inline OperatorSpectrum muViaOperator(const WeightedProblem& p, int k)
{
    detail::requireNondegenerate(p);
    detail::requireK(p, k);
    const Index n = p.op.size();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Q.topLeftCorner(n, n).diagonal() = p.weight.values.cwiseAbs2();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = p.op.dense();
    M.bottomRightCorner(n, n).setIdentity();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, M);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("muViaOperator: generalized eigensolver did not converge");
    const Eigen::VectorXd& ev = es.eigenvalues(); // ascending
    const double top = ev.cwiseAbs().maxCoeff();
    OperatorSpectrum out;
    std::vector<double> mus;
    for (Index i = ev.size() - 1; i >= 0; --i) {
        if (!(ev[i] > 1e-12 * top))
            break;
        mus.push_back(ev[i]);
        Eigen::VectorXd vec = es.eigenvectors().col(i);
        // Eigen returns M-orthonormal vectors, i.e. unit Z0 norm up to the h^dim factor.
        double scale = std::sqrt(vec.dot(M * vec));
        out.maxVelocityComponent =
            std::max(out.maxVelocityComponent, vec.tail(n).cwiseAbs().maxCoeff() / scale);
    }
    out.nonzeroCount = static_cast<int>(mus.size());
    if (out.nonzeroCount < k)
        throw NumericalFailure("muViaOperator: fewer nonzero eigenvalues than requested");
    out.report.k = k;
    out.report.mus = Eigen::Map<Eigen::VectorXd>(mus.data(), k);
    out.report.lambdas = out.report.mus.cwiseInverse();
    return out;
}

/// #{j : λ_j < λ̃} from a full report.
inline int countBelow(const SpectralReport& report, double lambdaTilde)
{
    int c = 0;
    for (Index j = 0; j < report.lambdas.size(); ++j)
        if (report.lambdas[j] < lambdaTilde)
            ++c;
    return c;
}

/// #{j : λ_j < λ̃} over the whole weighted spectrum.
inline int countBelow(const WeightedProblem& p, double lambdaTilde)
{
    return countBelow(solveWeighted(p, static_cast<int>(p.op.size())), lambdaTilde);
}

/**
 * Number of negative eigenvalues of A - λ̃ W² by Sylvester inertia: the
 * negative pivots of a sparse LDLᵀ factorization (fill-reducing ordering).
 */
inline int countNegative(const EllipticOperator& op, double lambdaTilde, const WeightPotential& weight)
{
    if (weight.size() != op.size())
        throw InvalidInput("countNegative: weight size does not match operator");
    SparseMatrix H = op.matrix();
    for (Index i = 0; i < H.rows(); ++i)
        H.coeffRef(i, i) -= lambdaTilde * weight.values[i] * weight.values[i];
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(H);
    if (ldlt.info() != Eigen::Success)
        throw NumericalFailure("countNegative: LDL^T factorization failed (lambda~ is an eigenvalue?)");
    const Eigen::VectorXd D = ldlt.vectorD();
    int neg = 0;
    for (Index i = 0; i < D.size(); ++i) {
        if (!(std::abs(D[i]) > 0.0) || !std::isfinite(D[i]))
            throw NumericalFailure("countNegative: zero pivot, lambda~ coincides with an eigenvalue");
        if (D[i] < 0.0)
            ++neg;
    }
    return neg;
}

/// ∫ W^r with the midpoint weight.
inline double weightPowerIntegral(const SpatialGrid& grid, const WeightPotential& weight, double r)
{
    double s = 0.0;
    for (Index i = 0; i < weight.values.size(); ++i)
        s += std::pow(std::abs(weight.values[i]), r);
    return grid.cellVolume() * s;
}

struct ClrValue {
    double value = 0.0;
    bool diagnosticMode = false; ///< outside the 3D, r > 3 regime where the inequality is a theorem
};

/// M_r λ̃^{r/2} ∫ W^r.
inline ClrValue clrBound(const SpatialGrid& grid, const WeightPotential& weight, double lambdaTilde, double Mr, double r)
{
    if (!(r > 0.0))
        throw InvalidInput("clrBound: r must be positive");
    if (!(lambdaTilde >= 0.0))
        throw InvalidInput("clrBound: lambda~ must be >= 0");
    ClrValue v;
    v.diagnosticMode = grid.dim() != 3 || !(r > 3.0);
    v.value = Mr * std::pow(lambdaTilde, 0.5 * r) * weightPowerIntegral(grid, weight, r);
    return v;
}

/// Smallest M_r with N(λ̃) <= M_r λ̃^{r/2} ∫W^r at every sweep point.
inline double fitClrConstant(const std::vector<std::pair<double, int>>& sweep, const SpatialGrid& grid,
                             const WeightPotential& weight, double r)
{
    double integral = weightPowerIntegral(grid, weight, r);
    double best = 0.0;
    for (const auto& [lt, count] : sweep)
        if (lt > 0.0 && count > 0)
            best = std::max(best, count / (std::pow(lt, 0.5 * r) * integral));
    return best;
}

/**
 * The same constant as a supremum over all λ̃ > 0: N is a right-continuous
 * step function jumping at each λ_j, so the sup is max_j j / (λ_j^{r/2} ∫W^r).
 */
inline double fitClrConstantFromSpectrum(const SpectralReport& report, const SpatialGrid& grid,
                                         const WeightPotential& weight, double r)
{
    double integral = weightPowerIntegral(grid, weight, r);
    double best = 0.0;
    for (Index j = 0; j < report.lambdas.size(); ++j)
        best = std::max(best, static_cast<double>(j + 1) / (std::pow(report.lambdas[j], 0.5 * r) * integral));
    return best;
}

struct AsymptoticVerdict {
    bool pass = true;
    double minMargin = std::numeric_limits<double>::infinity(); ///< min over j of bound_j / μ_j - 1
    int worstIndex = 0;                                           ///< 1-based j of the min margin
    double fittedSlope = 0.0;                                     ///< least-squares slope of log μ_j vs log j
};

/// Least-squares slope of log μ_j against log j (j = 1..k).
inline double logLogSlope(const Eigen::VectorXd& mus)
{
    const Index k = mus.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (Index j = 0; j < k; ++j) {
        double x = std::log(static_cast<double>(j + 1)), y = std::log(mus[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = k * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (k * sxy - sx * sy) / den;
}

/**
 * Check μ_j <= M_r^{2/r} ||W||²_{L^r} j^{-2/r} for every computed j. A relative
 * slack of `relTol` absorbs round-off when M_r was fitted on the same spectrum.
 */
inline AsymptoticVerdict asymptoticAudit(const SpectralReport& report, const SpatialGrid& grid,
                                         const WeightPotential& weight, double Mr, double r, double relTol = 1e-12)
{
    if (report.mus.size() < 1)
        throw InvalidInput("asymptoticAudit: empty report");
    AsymptoticVerdict v;
    double wr = std::pow(weightPowerIntegral(grid, weight, r), 1.0 / r);
    double coef = std::pow(Mr, 2.0 / r) * wr * wr;
    for (Index j = 0; j < report.mus.size(); ++j) {
        double bound = coef * std::pow(static_cast<double>(j + 1), -2.0 / r);
        double margin = bound / report.mus[j] - 1.0;
        if (margin < v.minMargin) {
            v.minMargin = margin;
            v.worstIndex = static_cast<int>(j + 1);
        }
        if (margin < -relTol)
            v.pass = false;
    }
    v.fittedSlope = report.mus.size() >= 2 ? logLogSlope(report.mus) : 0.0;
    return v;
}

} // namespace dwave

#endif
