#ifndef DWAVE_ELLIPTIC_HPP
#define DWAVE_ELLIPTIC_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "grid.hpp"

namespace dwave {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Point of the energy space: displacement u and velocity v on the same grid.
struct State {
    Field u;
    Field v;

    static State zero(Index size) { return State{Field::Zero(size), Field::Zero(size)}; }
    Index size() const { return u.size(); }

    State& operator+=(const State& o)
    {
        u += o.u;
        v += o.v;
        return *this;
    }
    State& operator-=(const State& o)
    {
        u -= o.u;
        v -= o.v;
        return *this;
    }
    State& operator*=(double s)
    {
        u *= s;
        v *= s;
        return *this;
    }
    friend State operator+(State a, const State& b) { return a += b; }
    friend State operator-(State a, const State& b) { return a -= b; }
    friend State operator*(double s, State a) { return a *= s; }
    bool allFinite() const { return u.allFinite() && v.allFinite(); }
};

namespace detail {

inline void pushLaplacian(const SpatialGrid& grid, std::vector<Eigen::Triplet<double>>& trip)
{
    for (Index i = 0; i < grid.size(); ++i) {
        auto m = grid.multiIndex(i);
        double diag = 0.0;
        for (int k = 0; k < grid.dim(); ++k) {
            double ih2 = 1.0 / (grid.h(k) * grid.h(k));
            diag += 2.0 * ih2;
            for (int s : {-1, 1}) {
                auto nb = m;
                nb[k] += s;
                if (nb[k] < 0 || nb[k] >= grid.n(k))
                    continue;
                trip.emplace_back(i, grid.index(nb[0], nb[1], nb[2]), -ih2);
            }
        }
        trip.emplace_back(i, i, diag);
    }
}

} // namespace detail

/// Centered-difference Dirichlet Laplacian -Δ_h on the interior nodes.
inline SparseMatrix dirichletLaplacian(const SpatialGrid& grid)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid.size()) * (2 * grid.dim() + 1));
    detail::pushLaplacian(grid, trip);
    SparseMatrix L(grid.size(), grid.size());
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

/**
 * Discrete A = -Δ + β(x) with homogeneous Dirichlet data.
 *
 * The matrix acts on nodal values; the bilinear form is
 * a(u,w) = h^dim * u·(A w), so a(u,u) = <Au,u>_{L2}.
 */
class EllipticOperator {
public:
    EllipticOperator() = default;
    EllipticOperator(SpatialGrid grid, PotentialField beta, SparseMatrix matrix)
        : grid_(std::move(grid)), beta_(std::move(beta)), matrix_(std::move(matrix))
    {
    }

    const SpatialGrid& grid() const { return grid_; }
    const PotentialField& beta() const { return beta_; }
    const SparseMatrix& matrix() const { return matrix_; }
    Index size() const { return grid_.size(); }

    Field apply(const Field& u) const { return matrix_ * u; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }

    double form(const Field& u, const Field& w) const { return grid_.cellVolume() * u.dot(matrix_ * w); }
    double l2(const Field& u, const Field& w) const { return l2Inner(grid_, u, w); }

    /// ||u||_{H^1_0} in the a-norm.
    double h10Norm(const Field& u) const { return std::sqrt(std::max(0.0, form(u, u))); }

private:
    SpatialGrid grid_;
    PotentialField beta_;
    SparseMatrix matrix_;
};

inline EllipticOperator assembleOperator(const SpatialGrid& grid, const PotentialField& beta)
{
    beta.validate(grid);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid.size()) * (2 * grid.dim() + 2));
    detail::pushLaplacian(grid, trip);
    for (Index i = 0; i < grid.size(); ++i)
        trip.emplace_back(i, i, beta.values[i]);
    SparseMatrix A(grid.size(), grid.size());
    A.setFromTriplets(trip.begin(), trip.end());
    return EllipticOperator(grid, beta, std::move(A));
}

/// Z0 inner product a(u1,u2) + <v1,v2>_{L2}.
inline double energyInner(const State& a, const State& b, const EllipticOperator& op)
{
    if (a.u.size() != op.size() || a.v.size() != op.size() || b.u.size() != op.size() || b.v.size() != op.size())
        throw InvalidInput("energyInner: state does not live on the operator's grid");
    return op.form(a.u, b.u) + op.l2(a.v, b.v);
}

inline double energyNorm(const State& a, const EllipticOperator& op) { return std::sqrt(std::max(0.0, energyInner(a, a, op))); }

struct FormBounds {
    double lambda1 = 0.0;
    double lambda0 = 0.0; ///< lower equivalence constant, a(u,u) >= lambda0 ||u||^2_{H1}
    double Lambda0 = 0.0; ///< upper equivalence constant
    double MB = 1.0;      ///< unit-cube Sobolev constant (configuration input)
};

/// Discrete standard H^1 Gram matrix: -Δ_h + I.
inline SparseMatrix h1Gram(const SpatialGrid& grid)
{
    SparseMatrix H = dirichletLaplacian(grid);
    for (Index i = 0; i < grid.size(); ++i)
        H.coeffRef(i, i) += 1.0;
    return H;
}

inline double h1Norm(const SpatialGrid& grid, const Field& u)
{
    return std::sqrt(grid.cellVolume() * u.dot(h1Gram(grid) * u));
}

/// Dense smallest eigenpair of A; the L2 weights cancel in the pencil (A, h^dim I).
inline std::pair<double, Field> smallestEigenpair(const EllipticOperator& op)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
    if (es.info() != Eigen::Success)
        throw NumericalFailure("symmetric eigensolver did not converge");
    return {es.eigenvalues()[0], es.eigenvectors().col(0)};
}

inline FormBounds estimateFormBounds(const EllipticOperator& op, double MB)
{
    FormBounds fb;
    fb.MB = MB;
    auto [lam1, vec] = smallestEigenpair(op);
    fb.lambda1 = lam1;
    if (!(lam1 > 0.0)) {
        Index peak = 0;
        vec.cwiseAbs().maxCoeff(&peak);
        auto x = op.grid().point(peak);
        std::ostringstream msg;
        msg << "coercivity violated: smallest eigenvalue of -Laplace+beta is " << lam1
            << "; minimizing vector peaks at node " << peak << " (x = " << x[0];
        for (int k = 1; k < op.grid().dim(); ++k)
            msg << ", " << x[k];
        msg << ")";
        throw HypothesisViolation("Hypothesis 1 (lambda1 > 0)", msg.str());
    }
    Eigen::MatrixXd H(h1Gram(op.grid()));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(op.dense(), H, Eigen::EigenvaluesOnly);
    if (ges.info() != Eigen::Success)
        throw NumericalFailure("generalized eigensolver did not converge for the form bounds");
    fb.lambda0 = ges.eigenvalues()[0];
    fb.Lambda0 = ges.eigenvalues()[ges.eigenvalues().size() - 1];
    return fb;
}

namespace detail {

/// Length of [a,b] ∩ [c,d].
inline double overlap(double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); }

} // namespace detail

/**
 * Uniform-Lebesgue norm sup_y ( ∫_{B(y)} |w|^σ )^{1/σ} over unit cubes B(y).
 *
 * Node i stands for its cell [x_i - h/2, x_i + h/2]; each cell contributes
 * |w_i|^σ times its overlap volume with the cube (midpoint rule). Cube centers
 * run over a lattice with stride min(h, 0.5) per axis, from lo - 0.5 to hi + 0.5.
 */
inline double uniformLebesgueNorm(const SpatialGrid& grid, const Field& w, double sigma)
{
    if (!(sigma >= 1.0))
        throw InvalidInput("uniformLebesgueNorm: sigma must be >= 1");
    if (w.size() != grid.size())
        throw InvalidInput("uniformLebesgueNorm: field size does not match grid");
    const int dim = grid.dim();
    std::array<std::vector<double>, 3> centers;
    for (int k = 0; k < 3; ++k) {
        if (k >= dim) {
            centers[k] = {0.0};
            continue;
        }
        double stride = std::min(grid.h(k), 0.5);
        double lo = grid.extent(k).lo - 0.5;
        double hi = grid.extent(k).hi + 0.5;
        int count = static_cast<int>(std::ceil((hi - lo) / stride - 1e-12));
        for (int i = 0; i <= count; ++i)
            centers[k].push_back(std::min(lo + i * stride, hi));
    }
    // Per-axis overlap weights between every center and every node cell.
    std::array<Eigen::MatrixXd, 3> ov;
    for (int k = 0; k < 3; ++k) {
        if (k >= dim) {
            ov[k] = Eigen::MatrixXd::Ones(1, 1);
            continue;
        }
        ov[k].resize(static_cast<Index>(centers[k].size()), grid.n(k));
        for (std::size_t c = 0; c < centers[k].size(); ++c)
            for (int i = 0; i < grid.n(k); ++i) {
                double x = grid.coordinate(k, i);
                ov[k](static_cast<Index>(c), i) =
                    detail::overlap(centers[k][c] - 0.5, centers[k][c] + 0.5, x - 0.5 * grid.h(k), x + 0.5 * grid.h(k));
            }
    }
    Field p = w.cwiseAbs().array().pow(sigma).matrix();
    double best = 0.0;
    for (Index c2 = 0; c2 < ov[2].rows(); ++c2)
        for (Index c1 = 0; c1 < ov[1].rows(); ++c1)
            for (Index c0 = 0; c0 < ov[0].rows(); ++c0) {
                double s = 0.0;
                for (Index i = 0; i < grid.size(); ++i) {
                    auto m = grid.multiIndex(i);
                    double wt = ov[0](c0, m[0]);
                    if (dim > 1)
                        wt *= ov[1](c1, m[1]);
                    if (dim > 2)
                        wt *= ov[2](c2, m[2]);
                    if (wt > 0.0)
                        s += wt * p[i];
                }
                best = std::max(best, s);
            }
    return std::pow(best, 1.0 / sigma);
}

} // namespace dwave

#endif
