#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "expfit/kernels.hpp"
#include "expfit/opcount.hpp"
#include "expfit/types.hpp"

namespace expfit {

/// Explicit Vandermonde matrix [V(omega)]_{j,k} = e^{j omega_k}, j = 0..n-1.
/// O(n p); every column counts as one data-length pass.
inline CMat vandermonde(const CVec& omega, Index n) {
    opcount::add_passes(static_cast<std::uint64_t>(omega.size()));
    CMat v(n, omega.size());
    for (Index k = 0; k < omega.size(); ++k) {
        const Complex step = std::exp(omega[k]);
        Complex cur(1.0, 0.0);
        for (Index j = 0; j < n; ++j) {
            v(j, k) = cur;
            // resync against accumulated rounding drift
            cur = ((j & 0xfff) == 0xfff) ? std::exp(omega[k] * double(j + 1))
                                         : cur * step;
        }
    }
    return v;
}

/// Explicit derivative [V'(omega)]_{j,k} = j e^{j omega_k}.
inline CMat vandermonde_deriv(const CVec& omega, Index n) {
    CMat v = vandermonde(omega, n);
    for (Index j = 0; j < n; ++j) v.row(j) *= static_cast<double>(j);
    return v;
}

/// V(mu)^* y, the data projection.  This is the only O(n)-cost step in a
/// projected evaluation pipeline; cost O(n m).
inline CVec project_data(const CVec& mu, const CVec& data) {
    opcount::add_passes(static_cast<std::uint64_t>(mu.size()));
    const Index n = data.size();
    CVec out(mu.size());
    for (Index k = 0; k < mu.size(); ++k) {
        const Complex mc = std::conj(mu[k]);
        const Complex step = std::exp(mc);
        Complex cur(1.0, 0.0);
        Complex acc(0.0, 0.0);
        for (Index j = 0; j < n; ++j) {
            acc += cur * data[j];
            cur = ((j & 0xfff) == 0xfff) ? std::exp(mc * double(j + 1))
                                         : cur * step;
        }
        out[k] = acc;
    }
    return out;
}

/// Orthonormalized subspace W(mu) = V(mu) R(mu)^{-1} realized through the
/// eigendecomposition of the Gram matrix V(mu)^* V(mu), with eigenvalues
/// below 1e-14 times the largest truncated.  `orth` acts as R(mu)^{-1}:
/// W = V(mu) * orth with orthonormal columns; `rank` is the effective
/// dimension after truncation and replaces m in every downstream problem.
struct SubspaceState {
    CVec mu;
    Index n = 0;
    CMat gram;            // V(mu)^* V(mu), Hermitian m x m
    CMat orth;            // m x rank
    CVec projected_data;  // W(mu)^* y, length rank
    Index rank = 0;
};

namespace detail {

// Eigen-truncated inverse square root factor of a Hermitian Gram matrix.
inline CMat gram_orthogonalizer(const CMat& gram, double rel_cut = 1e-14) {
    Eigen::SelfAdjointEigenSolver<CMat> es(gram);
    if (es.info() != Eigen::Success)
        throw FitError("gram eigendecomposition failed");
    const RVec& lam = es.eigenvalues();  // ascending
    const double lmax = lam(lam.size() - 1);
    if (!(lmax > 0.0)) throw FitError("gram matrix is not positive semidefinite");
    Index keep = 0;
    for (Index i = 0; i < lam.size(); ++i)
        if (lam(i) > rel_cut * lmax) ++keep;
    if (keep == 0) throw FitError("gram matrix numerically zero");
    CMat orth(gram.rows(), keep);
    for (Index i = 0; i < keep; ++i) {
        const Index src = lam.size() - keep + i;
        orth.col(i) = es.eigenvectors().col(src) / std::sqrt(lam(src));
    }
    return orth;
}

// Same factor after column equilibration; for Grams of matrices whose
// columns differ in norm by many orders of magnitude without the spanned
// subspace being close to degenerate (V versus V' blocks).
inline CMat equilibrated_gram_orthogonalizer(const CMat& gram,
                                             double rel_cut = 1e-14) {
    RVec s(gram.rows());
    for (Index i = 0; i < gram.rows(); ++i) {
        const double d = gram(i, i).real();
        if (!(d > 0.0)) throw FitError("gram matrix has nonpositive diagonal");
        s(i) = 1.0 / std::sqrt(d);
    }
    const CMat gn = s.asDiagonal() * gram * s.asDiagonal();
    return s.asDiagonal() * gram_orthogonalizer(gn, rel_cut);
}

inline void check_distinct(const CVec& mu, double tol, const char* who) {
    for (Index j = 0; j < mu.size(); ++j)
        for (Index k = j + 1; k < mu.size(); ++k)
            if (std::abs(expm1c(mu[j] - mu[k])) <= tol)
                throw std::invalid_argument(std::string(who) +
                                            ": duplicate interpolation points");
}

}  // namespace detail

/// Build the subspace state from precomputed inner products V(mu)^* y.
inline SubspaceState build_subspace_from_products(const CVec& mu, Index n,
                                                  const CVec& vmu_y) {
    if (n < mu.size())
        throw std::invalid_argument("build_subspace: need n >= number of points");
    detail::check_distinct(mu, 1e-13, "build_subspace");
    SubspaceState s;
    s.mu = mu;
    s.n = n;
    s.gram = gram_vv(mu, mu, n);
    s.gram = 0.5 * (s.gram + s.gram.adjoint()).eval();
    s.orth = detail::gram_orthogonalizer(s.gram);
    s.rank = s.orth.cols();
    s.projected_data = s.orth.adjoint() * vmu_y;
    return s;
}

inline SubspaceState build_subspace(const CVec& mu, Index n, const CVec& data) {
    if (data.size() != n)
        throw std::invalid_argument("build_subspace: data length mismatch");
    return build_subspace_from_products(mu, n, project_data(mu, data));
}

/// W(mu)^* V(omega) a from Gram products; no O(n) work.
inline CVec projected_model(const SubspaceState& s, const CVec& omega,
                            const CVec& a) {
    return s.orth.adjoint() * (gram_vv(s.mu, omega, s.n) * a);
}

/// Projected Jacobian [W^* V'(omega) diag(a), W^* V(omega)], rank x 2p.
inline CMat projected_jacobian(const SubspaceState& s, const CVec& omega,
                               const CVec& a) {
    const Index p = omega.size();
    CMat j(s.rank, 2 * p);
    j.leftCols(p) =
        s.orth.adjoint() * (gram_vvp(s.mu, omega, s.n) * a.asDiagonal());
    j.rightCols(p) = s.orth.adjoint() * gram_vv(s.mu, omega, s.n);
    return j;
}

/// Dense n x rank realization of W(mu); diagnostics only.
inline CMat dense_basis(const SubspaceState& s) {
    return vandermonde(s.mu, s.n) * s.orth;
}

namespace detail {

inline void check_orthonormal(const CMat& b, const char* who) {
    const CMat g = b.adjoint() * b;
    const double err =
        (g - CMat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    if (err > 1e-8)
        throw std::invalid_argument(std::string(who) + ": basis not orthonormal");
}

}  // namespace detail

/// Canonical angles between the ranges of two orthonormal bases, ascending in
/// [0, pi/2]: cos phi_k = sigma_k(A^* B).
inline RVec subspace_angles(const CMat& a, const CMat& b) {
    detail::check_orthonormal(a, "subspace_angles");
    detail::check_orthonormal(b, "subspace_angles");
    Eigen::JacobiSVD<CMat> svd(a.adjoint() * b);
    const RVec& sv = svd.singularValues();
    RVec phi(sv.size());
    for (Index k = 0; k < sv.size(); ++k)
        phi(k) = std::acos(std::clamp(sv(k), -1.0, 1.0));
    return phi;
}

/// Linearized D-efficiency eta(W, range J) = det(J^* P_W J)/det(J^* J)
/// = prod_k cos^2 phi_k(W, range J), computed via the QR factor of J.
inline double efficiency(const CMat& w_basis, const CMat& j_matrix) {
    detail::check_orthonormal(w_basis, "efficiency");
    const Index q = j_matrix.cols();
    if (w_basis.cols() < q)
        throw std::invalid_argument("efficiency: dim W must be >= dim J");
    Eigen::HouseholderQR<CMat> qr(j_matrix);
    const CMat r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < q; ++k) {
        dmax = std::max(dmax, std::abs(r(k, k)));
        dmin = std::min(dmin, std::abs(r(k, k)));
    }
    if (!(dmin > 1e-13 * dmax))
        throw std::invalid_argument("efficiency: J is rank deficient");
    const CMat qthin = qr.householderQ() * CMat::Identity(j_matrix.rows(), q);
    Eigen::JacobiSVD<CMat> svd(w_basis.adjoint() * qthin);
    double eta = 1.0;
    for (Index k = 0; k < q; ++k) {
        const double c = std::min(svd.singularValues()(k), 1.0);
        eta *= c * c;
    }
    return eta;
}

/// Orthonormal basis for range [V'(omega), V(omega)], the Jacobian subspace
/// of the exponential model (amplitude-independent).  Dense; diagnostics
/// scale only.
struct JacobianBasis {
    CVec omega;
    Index n = 0;
    CMat q;  // n x 2p orthonormal
};

inline JacobianBasis jacobian_basis(const CVec& omega, Index n) {
    const Index p = omega.size();
    if (n < 2 * p)
        throw std::invalid_argument("jacobian_basis: need n >= 2p");
    detail::check_distinct(omega, 1e-13, "jacobian_basis");
    CMat j(n, 2 * p);
    j.leftCols(p) = vandermonde_deriv(omega, n);
    j.rightCols(p) = vandermonde(omega, n);
    Eigen::HouseholderQR<CMat> qr(j);
    const CMat r = qr.matrixQR().topRows(2 * p);
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < 2 * p; ++k) {
        dmax = std::max(dmax, std::abs(r(k, k)));
        dmin = std::min(dmin, std::abs(r(k, k)));
    }
    if (!(dmin > 1e-14 * dmax))
        throw std::invalid_argument("jacobian_basis: rank deficient");
    JacobianBasis b;
    b.omega = omega;
    b.n = n;
    b.q = qr.householderQ() * CMat::Identity(n, 2 * p);
    return b;
}

namespace detail {

// eta(W(mu), J(omega)) entirely through closed-form Gram products; cost
// independent of n.  Used by the partition builder where n is far beyond
// dense reach.
inline double efficiency_via_grams(const CVec& mu, const CVec& omega, Index n) {
    const Index p = omega.size();
    // W factor
    CMat gww = gram_vv(mu, mu, n);
    gww = 0.5 * (gww + gww.adjoint()).eval();
    const CMat worth = gram_orthogonalizer(gww);

    // J(omega) self-Gram: blocks [[V'*V', V'*V], [V*V', V*V]]
    CMat gjj(2 * p, 2 * p);
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < p; ++k) {
            const Complex d = std::conj(omega[j]) + omega[k];
            gjj(j, k) = generalized_geometric_sum(2, 0, n, d);
            gjj(j, p + k) = geometric_sum_derivative(d, n);
            gjj(p + j, k) = geometric_sum_derivative(d, n);
            gjj(p + j, p + k) = geometric_sum(d, n);
        }
    }
    gjj = 0.5 * (gjj + gjj.adjoint()).eval();
    const CMat jorth = equilibrated_gram_orthogonalizer(gjj);

    CMat cross(mu.size(), 2 * p);
    cross.leftCols(p) = gram_vvp(mu, omega, n);
    cross.rightCols(p) = gram_vv(mu, omega, n);

    Eigen::JacobiSVD<CMat> svd(worth.adjoint() * cross * jorth);
    double eta = 1.0;
    for (Index k = 0; k < svd.singularValues().size(); ++k) {
        const double c = std::min(svd.singularValues()(k), 1.0);
        eta *= c * c;
    }
    return eta;
}

}  // namespace detail

/// eta(W(mu), J(omega)) at signal length n.  Builds dense bases below the
/// diagnostics cap and falls back to the closed-form Gram route above it.
inline double efficiency_at(const CVec& mu, const CVec& omega, Index n,
                            Index dense_cap = 16384) {
    if (n <= dense_cap) {
        const SubspaceState s =
            build_subspace_from_products(mu, n, CVec::Zero(mu.size()));
        CMat j(n, 2 * omega.size());
        j.leftCols(omega.size()) = vandermonde_deriv(omega, n);
        j.rightCols(omega.size()) = vandermonde(omega, n);
        return efficiency(dense_basis(s), j);
    }
    return detail::efficiency_via_grams(mu, omega, n);
}

}  // namespace expfit
