#pragma once

#include "qsteer/types.hpp"

namespace qsteer {

/// Hermitian, positive-semidefinite, unit-trace operator describing a quantum
/// state. Immutable after construction; the public constructor validates the
/// physical invariants (hermiticity, trace, positivity, each to 1e-10).
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho);

  const Matrix& matrix() const { return rho_; }
  Eigen::Index dim() const { return rho_.rows(); }

  // Internal fast path for states that are valid by construction (Kraus
  // updates of a valid state). Symmetrizes and re-normalizes the trace but
  // skips the eigenvalue check.
  struct Trusted {};
  DensityMatrix(Trusted, Matrix rho);

 private:
  Matrix rho_;
};

/// Rank-1 projector onto the (normalized) amplitude vector.
/// Throws "degenerate state vector" on a zero vector.
DensityMatrix make_pure_state(const Vector& amplitudes);

/// Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), symmetric in its
/// arguments, clamped to [0, 1]. Matrix square roots go through Hermitian
/// eigendecomposition with eigenvalues clamped at zero.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// True iff fidelity(rho, target)^2 >= 1 - eps. `target` must be pure, which
/// reduces the squared fidelity to tr(rho * target).
bool is_target(const DensityMatrix& rho, const DensityMatrix& target,
               double eps = kTargetEps);

}  // namespace qsteer
