#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsteer/density_matrix.hpp"
#include "qsteer/types.hpp"

namespace qsteer {

struct MeasurementOutcome {
  std::string label;
  Matrix kraus;
};

/// One control action: a named, ordered collection of Kraus operators over a
/// finite outcome set. Completeness (sum M^dag M = I to 1e-10) is checked on
/// construction.
class Measurement {
 public:
  Measurement(std::string name, std::vector<MeasurementOutcome> outcomes);

  const std::string& name() const { return name_; }
  const std::vector<MeasurementOutcome>& outcomes() const { return outcomes_; }
  int num_outcomes() const { return static_cast<int>(outcomes_.size()); }
  Eigen::Index dim() const { return outcomes_.front().kraus.rows(); }

 private:
  std::string name_;
  std::vector<MeasurementOutcome> outcomes_;
};

/// Ordered, finite action set. An optional index designates the action that
/// projects onto the target state and its orthogonal complement; when set,
/// the designated action must be a two-outcome projective pair with one
/// rank-1 projector.
class MeasurementSet {
 public:
  explicit MeasurementSet(std::vector<Measurement> actions,
                          std::optional<int> target_action_index = std::nullopt);

  const std::vector<Measurement>& actions() const { return actions_; }
  const Measurement& action(int i) const { return actions_.at(i); }
  int size() const { return static_cast<int>(actions_.size()); }
  Eigen::Index dim() const { return actions_.front().dim(); }
  std::optional<int> target_action_index() const { return target_action_index_; }

 private:
  std::vector<Measurement> actions_;
  std::optional<int> target_action_index_;
};

/// The standard qubit family of T projective measurements at angles
/// pi*i/(2T), i = 1..T, from the |0>,|1> axis. Outcome labels are "phi_i"
/// (the rotated |0> direction) and "psi_i" (its complement). The last action
/// projects onto {|1>, |0>} and is designated as the target action.
/// Throws "set too small" for T < 2.
MeasurementSet build_standard_set(int T);

struct OutcomeResult {
  std::string label;
  int outcome_index;
  double probability;
  DensityMatrix post_state;
};

/// Conditional measurement update. Returns one entry per outcome with
/// probability tr(M rho M^dag) above kProbFloor, each with the renormalized
/// post-measurement state; lower-probability outcomes are omitted.
std::vector<OutcomeResult> apply_measurement(const DensityMatrix& rho,
                                             const Measurement& e);

/// Outcome-averaged channel: sum_y M(y) rho M(y)^dag.
DensityMatrix unconditional_evolve(const DensityMatrix& rho,
                                   const Measurement& e);

}  // namespace qsteer
