#pragma once

// Symmetric tridiagonal pencils K - lambda*M with diagonal positive M.
//
// The smallest eigenvalue is found by bisection on the Sturm count of the
// LDL^T pivots of K - sigma*M; the eigenvector by shifted inverse iteration.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehd {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct TridiagonalPencil {
    Vector<Scalar> diag;  // K(i,i)
    Vector<Scalar> off;   // K(i,i+1), size n-1
    Vector<Scalar> mass;  // M(i,i) > 0

    Eigen::Index size() const { return diag.size(); }
};

/// Number of eigenvalues of the pencil strictly below sigma.
template <typename Scalar>
Eigen::Index sturm_count(const TridiagonalPencil<Scalar>& p, Scalar sigma)
{
    const Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
    Eigen::Index negatives = 0;
    Scalar q = p.diag(0) - sigma * p.mass(0);
    for (Eigen::Index i = 0;; ++i) {
        if (q == Scalar(0)) {
            q = -tiny;
        }
        if (q < Scalar(0)) {
            ++negatives;
        }
        if (i + 1 == p.size()) {
            break;
        }
        q = p.diag(i + 1) - sigma * p.mass(i + 1) - p.off(i) * p.off(i) / q;
    }
    return negatives;
}

/// Gershgorin bound on the spectrum of M^{-1} K.
template <typename Scalar>
Scalar gershgorin_upper(const TridiagonalPencil<Scalar>& p)
{
    Scalar bound = 0;
    const Eigen::Index n = p.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        Scalar row = std::abs(p.diag(i));
        if (i > 0) row += std::abs(p.off(i - 1));
        if (i + 1 < n) row += std::abs(p.off(i));
        bound = std::max(bound, row / p.mass(i));
    }
    return bound;
}

/// Smallest eigenvalue of a pencil with positive semidefinite K.
template <typename Scalar>
Scalar smallest_eigenvalue(const TridiagonalPencil<Scalar>& p, int max_iter = 400)
{
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    Scalar lo = 0;
    Scalar hi = gershgorin_upper(p) * (Scalar(1) + Scalar(16) * eps) + eps;
    for (int it = 0; it < max_iter; ++it) {
        const Scalar mid = Scalar(0.5) * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (sturm_count(p, mid) >= 1) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= Scalar(2) * eps * hi || hi <= Scalar(1e3) * std::numeric_limits<Scalar>::min()) {
            break;
        }
    }
    return Scalar(0.5) * (lo + hi);
}

/// Solves (K - sigma*M) x = rhs by the Thomas algorithm. Stable for sigma below
/// the smallest eigenvalue, where the shifted matrix is positive definite.
template <typename Scalar>
Vector<Scalar> solve_shifted(const TridiagonalPencil<Scalar>& p, Scalar sigma, const Vector<Scalar>& rhs)
{
    const Eigen::Index n = p.size();
    Vector<Scalar> c(n), d(n), x(n);
    Scalar b = p.diag(0) - sigma * p.mass(0);
    c(0) = n > 1 ? p.off(0) / b : Scalar(0);
    d(0) = rhs(0) / b;
    for (Eigen::Index i = 1; i < n; ++i) {
        b = p.diag(i) - sigma * p.mass(i) - p.off(i - 1) * c(i - 1);
        c(i) = i + 1 < n ? p.off(i) / b : Scalar(0);
        d(i) = (rhs(i) - p.off(i - 1) * d(i - 1)) / b;
    }
    x(n - 1) = d(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) {
        x(i) = d(i) - c(i) * x(i + 1);
    }
    return x;
}

/// K x for the pencil's stiffness matrix.
template <typename Scalar>
Vector<Scalar> apply_stiffness(const TridiagonalPencil<Scalar>& p, const Vector<Scalar>& x)
{
    const Eigen::Index n = p.size();
    Vector<Scalar> y = p.diag.cwiseProduct(x);
    if (n > 1) {
        y.head(n - 1) += p.off.cwiseProduct(x.tail(n - 1));
        y.tail(n - 1) += p.off.cwiseProduct(x.head(n - 1));
    }
    return y;
}

template <typename Scalar>
struct EigenPair {
    Scalar value;
    Vector<Scalar> vector;    // M-normalized, positive sum
    Scalar relative_residual; // |(K - value M) x| / (|K| |x|)
};

/// Ground state of the pencil: bisection for the value, inverse iteration for the vector.
template <typename Scalar>
EigenPair<Scalar> ground_state(const TridiagonalPencil<Scalar>& p, int inverse_steps = 4)
{
    const Scalar lambda = smallest_eigenvalue(p);
    const Scalar shift = lambda - Scalar(1e-9) * std::max(Scalar(1), lambda);
    Vector<Scalar> x = Vector<Scalar>::Ones(p.size());
    for (int k = 0; k < inverse_steps; ++k) {
        x = solve_shifted(p, shift, Vector<Scalar>(p.mass.cwiseProduct(x)));
        x /= std::sqrt(x.dot(p.mass.cwiseProduct(x)));
    }
    if (x.sum() < Scalar(0)) {
        x = -x;
    }
    const Vector<Scalar> kx = apply_stiffness(p, x);
    const Vector<Scalar> mx = p.mass.cwiseProduct(x);
    Scalar k_norm = p.diag.cwiseAbs().maxCoeff();
    if (p.size() > 1) {
        k_norm += Scalar(2) * p.off.cwiseAbs().maxCoeff();
    }
    const Scalar scale = std::max(k_norm * x.norm(), std::numeric_limits<Scalar>::min());
    return {lambda, x, (kx - lambda * mx).norm() / scale};
}

} // namespace ehd
