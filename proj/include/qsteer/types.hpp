#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace qsteer {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using StateId = std::int32_t;

// Tolerance used when validating physical invariants at construction time
// (hermiticity, unit trace, Kraus completeness).
inline constexpr double kConstructionTol = 1e-10;

// Tolerance used when comparing computed quantities.
inline constexpr double kComparisonTol = 1e-9;

// Measurement outcomes with probability at or below this floor are dropped;
// the conditional state update is undefined at probability zero.
inline constexpr double kProbFloor = 1e-12;

// Default tolerance for deciding that a state has reached the target:
// fidelity(rho, target)^2 >= 1 - kTargetEps.
inline constexpr double kTargetEps = 1e-9;

// Quantization step for canonical state keys.
inline constexpr double kKeyResolution = 1e-8;

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

template <typename DerivedA, typename DerivedB>
double max_abs_diff(const Eigen::MatrixBase<DerivedA>& a,
                    const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m,
                  double tol = kConstructionTol) {
  return max_abs_diff(m, m.adjoint()) <= tol;
}

}  // namespace qsteer
