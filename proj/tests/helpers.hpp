#pragma once

#include <complex>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "expfit/types.hpp"

namespace test {

using expfit::CMat;
using expfit::Complex;
using expfit::CVec;
using expfit::Index;
using expfit::RVec;

inline std::string data_dir() { return EXPFIT_DATA_DIR; }

inline double rel_err(Complex got, Complex want) {
    const double scale = std::abs(want);
    return scale == 0.0 ? std::abs(got) : std::abs(got - want) / scale;
}

struct Gen {
    std::mt19937_64 eng;
    explicit Gen(std::uint64_t seed) : eng(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
    Complex cnormal() { return {normal(), normal()}; }

    // log-uniform magnitude with uniform phase
    Complex log_uniform_complex(double lo_mag, double hi_mag) {
        const double mag =
            std::exp(uniform(std::log(lo_mag), std::log(hi_mag)));
        const double ph = uniform(-expfit::pi, expfit::pi);
        return {mag * std::cos(ph), mag * std::sin(ph)};
    }

    CVec cvec(Index n) {
        CVec v(n);
        for (Index i = 0; i < n; ++i) v[i] = cnormal();
        return v;
    }
    CMat cmat(Index r, Index c) {
        CMat m(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) m(i, j) = cnormal();
        return m;
    }

    // random orthonormal basis of dimension n x m
    CMat orthonormal(Index n, Index m) {
        Eigen::HouseholderQR<CMat> qr(cmat(n, m));
        return qr.householderQ() * CMat::Identity(n, m);
    }
};

// explicit Vandermonde build, independent of the library implementation
inline CMat dense_vandermonde(const CVec& omega, Index n) {
    CMat v(n, omega.size());
    for (Index k = 0; k < omega.size(); ++k)
        for (Index j = 0; j < n; ++j)
            v(j, k) = std::exp(omega[k] * static_cast<double>(j));
    return v;
}

inline CMat dense_vandermonde_deriv(const CVec& omega, Index n) {
    CMat v(n, omega.size());
    for (Index k = 0; k < omega.size(); ++k)
        for (Index j = 0; j < n; ++j)
            v(j, k) = static_cast<double>(j) *
                      std::exp(omega[k] * static_cast<double>(j));
    return v;
}

}  // namespace test
