#include "qsteer/density_matrix.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace qsteer {
namespace {

// sqrt of a PSD Hermitian matrix; eigenvalues clamped at 0 against rounding.
Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

DensityMatrix::DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
  if (rho_.rows() < 1 || rho_.rows() != rho_.cols()) {
    throw std::invalid_argument("density matrix must be square and non-empty");
  }
  if (!is_hermitian(rho_, kConstructionTol)) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  const Complex tr = rho_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > kConstructionTol) {
    throw std::invalid_argument("density matrix trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kConstructionTol) {
    throw std::invalid_argument("density matrix is not positive semidefinite");
  }
}

DensityMatrix::DensityMatrix(Trusted, Matrix rho) : rho_(std::move(rho)) {
  rho_ = (0.5 * (rho_ + rho_.adjoint())).eval();
  rho_ /= rho_.trace().real();
}

DensityMatrix make_pure_state(const Vector& amplitudes) {
  const double norm = amplitudes.norm();
  if (norm <= 1e-12) {
    throw std::invalid_argument("degenerate state vector");
  }
  const Vector v = amplitudes / norm;
  return DensityMatrix(DensityMatrix::Trusted{}, v * v.adjoint());
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  const Matrix root = psd_sqrt(rho.matrix());
  Matrix inner = root * sigma.matrix() * root;
  inner = (0.5 * (inner + inner.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues();
  // Rank-deficient products carry O(eps) noise eigenvalues whose square
  // roots would contribute O(1e-8); drop everything below a relative floor.
  const double floor = std::max(lam.maxCoeff(), 0.0) * 1e-13;
  double f = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > floor) f += std::sqrt(lam(i));
  }
  return std::clamp(f, 0.0, 1.0);
}

bool is_target(const DensityMatrix& rho, const DensityMatrix& target,
               double eps) {
  if (rho.dim() != target.dim()) {
    throw std::invalid_argument("is_target: dimension mismatch");
  }
  const double purity = (target.matrix() * target.matrix()).trace().real();
  if (purity < 1.0 - 1e-8) {
    throw std::invalid_argument("is_target: target state must be pure");
  }
  const double overlap = (rho.matrix() * target.matrix()).trace().real();
  return overlap >= 1.0 - eps;
}

}  // namespace qsteer
