#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace expfit {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Recoverable numerical failure during a fit (ill-conditioning, no
/// convergence).  Callers such as the Levenberg-Marquardt driver catch this
/// and react (reject the step, increase damping) instead of aborting.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace expfit
