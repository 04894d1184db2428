#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "expfit/types.hpp"

namespace expfit {

/// e^z - 1 for complex z without cancellation near z = 0.
///
/// Real part:  expm1(x) cos y - 2 sin^2(y/2),  imaginary part:  e^x sin y.
/// Accurate relative to |e^z - 1| for all z with moderate |y|.
inline Complex expm1c(Complex z) {
    const double x = z.real();
    const double y = z.imag();
    const double s = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * s * s,
            std::exp(x) * std::sin(y)};
}

/// Reduce an imaginary part into [-pi, pi).  Exact up to the 2*pi multiples
/// removed; the geometric sums are 2*pi*i-periodic in their argument so the
/// reduction does not change their value.
inline double reduce_imag(double y) {
    double t = std::remainder(y, 2.0 * pi);
    if (t >= pi) t -= 2.0 * pi;
    return t;
}

inline Complex reduce_delta(Complex delta) {
    return {delta.real(), reduce_imag(delta.imag())};
}

/// Argument of a geometric sum: delta = conj(mu_j) + omega_k with the
/// imaginary part reduced into [-pi, pi), and the number of samples n >= 1.
struct SumArgument {
    Complex delta;
    Index n = 1;

    SumArgument(Complex d, Index n_) : delta(reduce_delta(d)), n(n_) {
        if (n < 1) throw std::invalid_argument("SumArgument: n must be >= 1");
    }
};

/// sum_{l=0}^{n-1} e^{delta l}.
///
/// Evaluated as expm1(n delta)/expm1(delta) away from e^delta = 1 and with a
/// two-term Taylor patch n (1 + (n-1) delta / 2) across the removable
/// discontinuity.
inline Complex geometric_sum(Complex delta, Index n) {
    delta = reduce_delta(delta);
    const double nd = static_cast<double>(n);
    const Complex e1 = expm1c(delta);
    if (std::abs(e1) > 1e-15)
        return expm1c(nd * delta) / e1;
    return nd * (1.0 + 0.5 * (nd - 1.0) * delta);
}

inline Complex geometric_sum(const SumArgument& arg) {
    return geometric_sum(arg.delta, arg.n);
}

/// Truncated series for e^delta/(1-e^delta) - n e^{n delta}/(1-e^{n delta});
/// the first seven terms in odd powers of delta.  Valid for |delta| <= 0.5/n
/// (the caller selects this branch); all coefficients vanish at n = 1.
inline Complex expdiff(Index n, Complex delta) {
    const double nd = static_cast<double>(n);
    const double n2 = nd * nd;
    const double n4 = n2 * n2;
    const double n6 = n4 * n2;
    const double n8 = n4 * n4;
    const double n10 = n8 * n2;
    const double n12 = n8 * n4;
    const Complex d2 = delta * delta;

    Complex acc = -691.0 * (n12 - 1.0) / 1307674368000.0;
    acc = acc * d2 + (n10 - 1.0) / 47900160.0;
    acc = acc * d2 - (n8 - 1.0) / 1209600.0;
    acc = acc * d2 + (n6 - 1.0) / 30240.0;
    acc = acc * d2 - (n4 - 1.0) / 720.0;
    acc = acc * d2 + (n2 - 1.0) / 12.0;
    return acc * delta + 0.5 * (nd - 1.0);
}

/// sum_{l=0}^{n-1} l e^{delta l}.
///
/// Three branches: the expm1 ratio form for |delta| > 0.5/n, the expm1 ratio
/// times expdiff for 0 < |delta| <= 0.5/n, and the exact n(n-1)/2 at
/// delta = 0.
inline Complex geometric_sum_derivative(Complex delta, Index n) {
    delta = reduce_delta(delta);
    const double nd = static_cast<double>(n);
    const double ad = std::abs(delta);
    if (ad == 0.0) return 0.5 * nd * (nd - 1.0);
    if (ad > 0.5 / nd) {
        const Complex e1 = expm1c(delta);
        const Complex en = expm1c(nd * delta);
        const Complex ed = std::exp(delta);
        const Complex edn = std::exp(nd * delta);
        return (nd * edn * e1 - ed * en) / (e1 * e1);
    }
    return expm1c(nd * delta) / expm1c(delta) * expdiff(n, delta);
}

inline Complex geometric_sum_derivative(const SumArgument& arg) {
    return geometric_sum_derivative(arg.delta, arg.n);
}

/// Coefficients chi_n(p, l) of the p-th derivative of e^{n delta}/(1-e^delta)
/// with respect to delta, stored as integer polynomials in n:
///
///   d^p/d delta^p  e^{n delta}/(1-e^delta)
///     = sum_{l=0}^p chi_n(p, l) e^{(n+l) delta} / (1-e^delta)^{l+1}.
///
/// Recurrence: chi_n(p+1, l) = (n+l) chi_n(p, l) + l chi_n(p, l-1) with
/// chi_n(0, l) = [l == 0].
struct ChiTable {
    int p = 0;
    // coeff[l][k] is the coefficient of n^k in chi_n(p, l), l = 0..p.
    std::vector<std::vector<long long>> coeff;

    double eval(int l, double n) const {
        const auto& c = coeff[static_cast<std::size_t>(l)];
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;)
            acc = acc * n + static_cast<double>(c[k]);
        return acc;
    }
};

inline ChiTable chi_coefficients(int p) {
    if (p < 0 || p > 12)
        throw std::invalid_argument("chi_coefficients: order must be in [0, 12]");
    ChiTable t;
    t.p = 0;
    t.coeff = {{1}};
    for (int q = 0; q < p; ++q) {
        std::vector<std::vector<long long>> next(static_cast<std::size_t>(q) + 2);
        for (int l = 0; l <= q + 1; ++l) {
            std::vector<long long> acc(static_cast<std::size_t>(q) + 3, 0);
            if (l <= q) {
                const auto& cl = t.coeff[static_cast<std::size_t>(l)];
                // (n + l) * chi(q, l): shift for the n factor, scale for l.
                for (std::size_t k = 0; k < cl.size(); ++k) {
                    acc[k + 1] += cl[k];
                    acc[k] += static_cast<long long>(l) * cl[k];
                }
            }
            if (l >= 1 && l - 1 <= q) {
                const auto& cm = t.coeff[static_cast<std::size_t>(l - 1)];
                for (std::size_t k = 0; k < cm.size(); ++k)
                    acc[k] += static_cast<long long>(l) * cm[k];
            }
            while (acc.size() > 1 && acc.back() == 0) acc.pop_back();
            next[static_cast<std::size_t>(l)] = std::move(acc);
        }
        t.coeff = std::move(next);
        t.p = q + 1;
    }
    return t;
}

namespace detail {

// Bernoulli numbers B_0..B_max via the standard recurrence
// B_m = -1/(m+1) sum_{k<m} C(m+1, k) B_k (convention B_1 = -1/2).
inline const std::vector<double>& bernoulli_numbers() {
    static const std::vector<double> table = [] {
        constexpr int max_order = 48;
        std::vector<double> b(max_order + 1, 0.0);
        b[0] = 1.0;
        for (int m = 1; m <= max_order; ++m) {
            double acc = 0.0;
            double binom = 1.0;  // C(m+1, 0)
            for (int k = 0; k < m; ++k) {
                acc += binom * b[static_cast<std::size_t>(k)];
                binom *= static_cast<double>(m + 1 - k) / static_cast<double>(k + 1);
            }
            // binom is now C(m+1, m) = m+1
            b[static_cast<std::size_t>(m)] = -acc / binom;
        }
        return b;
    }();
    return table;
}

// B_p(x) without the public order cap; used by the near-zero Taylor branch
// of the generalized geometric sum.
inline double bernoulli_poly(int p, double x) {
    const auto& b = bernoulli_numbers();
    double acc = 0.0;
    double binom = 1.0;  // C(p, 0)
    // sum_k C(p, k) B_{p-k} x^k, Horner in x from the top power down.
    for (int k = 0; k <= p; ++k) {
        // coefficient of x^{p-k} is C(p, p-k) B_k = C(p, k) B_k
        acc = acc * x + binom * b[static_cast<std::size_t>(k)];
        binom *= static_cast<double>(p - k) / static_cast<double>(k + 1);
    }
    return acc;
}

// sum_{k=n1}^{n2-1} k^q = (B_{q+1}(n2) - B_{q+1}(n1)) / (q+1).
inline double power_sum(int q, double n1, double n2) {
    return (bernoulli_poly(q + 1, n2) - bernoulli_poly(q + 1, n1)) /
           static_cast<double>(q + 1);
}

}  // namespace detail

/// B_p(x), the p-th Bernoulli polynomial.
inline double bernoulli_polynomial(int p, double x) {
    if (p < 0 || p > 13)
        throw std::invalid_argument("bernoulli_polynomial: order must be in [0, 13]");
    return detail::bernoulli_poly(p, x);
}

/// sum_{k=n1}^{n2-1} k^p e^{delta k}.
///
/// Away from e^delta = 1 this uses the chi-coefficient closed form; at and
/// near e^delta = 1 it switches to an expansion in delta whose coefficients
/// are power sums evaluated through Bernoulli polynomials (the m = 0 term is
/// the exact e^delta = 1 value (B_{p+1}(n2) - B_{p+1}(n1))/(p+1)).  The
/// switch also covers |delta| (n2 + p) <= 1/2 where the chi form loses all
/// relative accuracy to cancellation.
inline Complex generalized_geometric_sum(int p, Index n1, Index n2, Complex delta) {
    if (p < 0 || p > 12)
        throw std::invalid_argument("generalized_geometric_sum: order must be in [0, 12]");
    if (n1 < 0 || n1 >= n2)
        throw std::invalid_argument("generalized_geometric_sum: need 0 <= n1 < n2");
    delta = reduce_delta(delta);
    const double d1 = static_cast<double>(n1);
    const double d2 = static_cast<double>(n2);

    if (n2 - n1 == 1) {
        const double kp = (p == 0) ? 1.0 : std::pow(d1, p);
        return kp * std::exp(delta * d1);
    }

    const double ad = std::abs(delta);
    const bool at_one = std::abs(expm1c(delta)) <= 1e-15 * std::max(1, p);
    if (at_one || ad * (d2 + p) <= 0.5) {
        // Taylor about delta = 0: sum_m delta^m / m! * power_sum(p + m).
        Complex acc(0.0, 0.0);
        Complex dm(1.0, 0.0);  // delta^m / m!
        for (int m = 0; m <= 34; ++m) {
            const Complex term = dm * detail::power_sum(p + m, d1, d2);
            acc += term;
            if (m > 0 && std::abs(term) <= 1e-18 * std::abs(acc)) break;
            dm *= delta / static_cast<double>(m + 1);
        }
        return acc;
    }

    static const std::vector<ChiTable> tables = [] {
        std::vector<ChiTable> t;
        for (int q = 0; q <= 12; ++q) t.push_back(chi_coefficients(q));
        return t;
    }();
    const ChiTable& chi = tables[static_cast<std::size_t>(p)];

    const Complex one_minus = -expm1c(delta);  // 1 - e^delta
    const Complex e1 = std::exp(delta * d1);
    const Complex e2 = std::exp(delta * d2);
    const Complex ed = std::exp(delta);
    Complex acc(0.0, 0.0);
    Complex pow_num1 = e1;            // e^{(n1+l) delta}
    Complex pow_num2 = e2;            // e^{(n2+l) delta}
    Complex pow_den = one_minus;      // (1 - e^delta)^{l+1}
    for (int l = 0; l <= p; ++l) {
        acc += (chi.eval(l, d1) * pow_num1 - chi.eval(l, d2) * pow_num2) / pow_den;
        pow_num1 *= ed;
        pow_num2 *= ed;
        pow_den *= one_minus;
    }
    return acc;
}

/// [V(mu)^* V(omega)]_{j,k} = geometric_sum(conj(mu_j) + omega_k, n).
/// Cost O(m p), independent of n.
inline CMat gram_vv(const CVec& mu, const CVec& omega, Index n) {
    CMat g(mu.size(), omega.size());
    for (Index j = 0; j < mu.size(); ++j)
        for (Index k = 0; k < omega.size(); ++k)
            g(j, k) = geometric_sum(std::conj(mu[j]) + omega[k], n);
    return g;
}

/// [V(mu)^* V'(omega)]_{j,k} = geometric_sum_derivative(conj(mu_j) + omega_k, n).
inline CMat gram_vvp(const CVec& mu, const CVec& omega, Index n) {
    CMat g(mu.size(), omega.size());
    for (Index j = 0; j < mu.size(); ++j)
        for (Index k = 0; k < omega.size(); ++k)
            g(j, k) = geometric_sum_derivative(std::conj(mu[j]) + omega[k], n);
    return g;
}

}  // namespace expfit
