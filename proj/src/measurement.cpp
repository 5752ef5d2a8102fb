#include "qsteer/measurement.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace qsteer {

Measurement::Measurement(std::string name,
                         std::vector<MeasurementOutcome> outcomes)
    : name_(std::move(name)), outcomes_(std::move(outcomes)) {
  if (outcomes_.empty()) {
    throw std::invalid_argument("measurement must have at least one outcome");
  }
  const Eigen::Index d = outcomes_.front().kraus.rows();
  if (d < 1) {
    throw std::invalid_argument("Kraus operators must be non-empty");
  }
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& o : outcomes_) {
    if (o.kraus.rows() != d || o.kraus.cols() != d) {
      throw std::invalid_argument(
          "Kraus operators must all be square with equal dimension");
    }
    sum += o.kraus.adjoint() * o.kraus;
  }
  if (max_abs_diff(sum, Matrix::Identity(d, d)) > kConstructionTol) {
    throw std::invalid_argument("Kraus operators violate completeness");
  }
}

namespace {

bool is_projector(const Matrix& p, double tol) {
  return is_hermitian(p, tol) && max_abs_diff(p * p, p) <= tol;
}

}  // namespace

MeasurementSet::MeasurementSet(std::vector<Measurement> actions,
                               std::optional<int> target_action_index)
    : actions_(std::move(actions)), target_action_index_(target_action_index) {
  if (actions_.empty()) {
    throw std::invalid_argument("measurement set must not be empty");
  }
  const Eigen::Index d = actions_.front().dim();
  for (const auto& a : actions_) {
    if (a.dim() != d) {
      throw std::invalid_argument("actions must share one dimension");
    }
  }
  if (target_action_index_) {
    const int i = *target_action_index_;
    if (i < 0 || i >= size()) {
      throw std::invalid_argument("target action index out of range");
    }
    const Measurement& e = actions_[i];
    if (e.num_outcomes() != 2) {
      throw std::invalid_argument("target action must have two outcomes");
    }
    const Matrix& p0 = e.outcomes()[0].kraus;
    const Matrix& p1 = e.outcomes()[1].kraus;
    const bool projective = is_projector(p0, kConstructionTol) &&
                            is_projector(p1, kConstructionTol) &&
                            max_abs_diff(p0 + p1, Matrix::Identity(d, d)) <=
                                kConstructionTol;
    const double r0 = p0.trace().real();
    const double r1 = p1.trace().real();
    const bool has_rank1 = std::abs(r0 - 1.0) <= kConstructionTol ||
                           std::abs(r1 - 1.0) <= kConstructionTol;
    if (!projective || !has_rank1) {
      throw std::invalid_argument(
          "target action must be a rank-1 projector and its complement");
    }
  }
}

MeasurementSet build_standard_set(int T) {
  if (T < 2) {
    throw std::invalid_argument("set too small");
  }
  std::vector<Measurement> actions;
  actions.reserve(T);
  for (int i = 1; i <= T; ++i) {
    const double theta = std::numbers::pi * i / (2.0 * T);
    Vector phi(2);
    phi << std::cos(theta), std::sin(theta);
    Vector psi(2);
    psi << -std::sin(theta), std::cos(theta);
    std::vector<MeasurementOutcome> outcomes;
    outcomes.push_back({"phi_" + std::to_string(i), phi * phi.adjoint()});
    outcomes.push_back({"psi_" + std::to_string(i), psi * psi.adjoint()});
    actions.emplace_back("E_" + std::to_string(i), std::move(outcomes));
  }
  return MeasurementSet(std::move(actions), T - 1);
}

std::vector<OutcomeResult> apply_measurement(const DensityMatrix& rho,
                                             const Measurement& e) {
  if (rho.dim() != e.dim()) {
    throw std::invalid_argument("apply_measurement: dimension mismatch");
  }
  std::vector<OutcomeResult> results;
  results.reserve(e.outcomes().size());
  for (int y = 0; y < e.num_outcomes(); ++y) {
    const Matrix& m = e.outcomes()[y].kraus;
    Matrix updated = m * rho.matrix() * m.adjoint();
    const double p = updated.trace().real();
    if (p <= kProbFloor) {
      continue;
    }
    results.push_back({e.outcomes()[y].label, y, p,
                       DensityMatrix(DensityMatrix::Trusted{}, updated / p)});
  }
  return results;
}

DensityMatrix unconditional_evolve(const DensityMatrix& rho,
                                   const Measurement& e) {
  if (rho.dim() != e.dim()) {
    throw std::invalid_argument("unconditional_evolve: dimension mismatch");
  }
  Matrix sum = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& o : e.outcomes()) {
    sum += o.kraus * rho.matrix() * o.kraus.adjoint();
  }
  return DensityMatrix(DensityMatrix::Trusted{}, std::move(sum));
}

}  // namespace qsteer
