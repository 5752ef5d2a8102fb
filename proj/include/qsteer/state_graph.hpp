#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qsteer/density_matrix.hpp"
#include "qsteer/measurement.hpp"

namespace qsteer {

/// Quantized fingerprint of a density matrix: real and imaginary parts of
/// every entry rounded to the nearest multiple of the key resolution. Keys
/// index the deduplication buckets; matching is always confirmed by an exact
/// entrywise comparison against the stored representative.
struct CanonicalKey {
  std::vector<std::int64_t> quantized;
  bool operator==(const CanonicalKey&) const = default;
};

struct CanonicalKeyHash {
  std::size_t operator()(const CanonicalKey& k) const;
};

CanonicalKey canonical_key(const DensityMatrix& rho,
                           double resolution = kKeyResolution);

struct Transition {
  std::int32_t outcome;  // index into the action's outcome list
  StateId next;
  double probability;
};

inline constexpr int kDefaultMaxStates = 10000;

/// Deduplicated reachable states plus all (state, action, outcome)
/// transitions. State ids follow breadth-first discovery order with actions
/// in set order and outcomes in declaration order, so identical inputs yield
/// identical graphs.
class StateGraph {
 public:
  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions() const { return num_actions_; }
  Eigen::Index dim() const { return states_.front().dim(); }

  const DensityMatrix& state(StateId s) const { return states_[s]; }
  const std::vector<DensityMatrix>& states() const { return states_; }

  std::span<const Transition> transitions(StateId s, int action) const {
    const std::size_t row = static_cast<std::size_t>(s) * num_actions_ + action;
    return {transitions_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
  }

  /// First-reached breadth-first depth of each state.
  int depth(StateId s) const { return depths_[s]; }

  /// Depth at which expansion stopped, when the closure was horizon-truncated.
  std::optional<int> truncated_at() const { return truncated_at_; }

  /// Whether the state's outgoing transitions are recorded (false only for
  /// frontier states of a truncated graph).
  bool expanded(StateId s) const {
    return !truncated_at_ || depths_[s] < *truncated_at_;
  }

  StateId initial_id() const { return 0; }

  std::optional<StateId> target_id() const { return target_id_; }
  void set_target_id(std::optional<StateId> id) { target_id_ = id; }

 private:
  StateGraph() = default;
  friend StateGraph enumerate_reachable(const DensityMatrix&,
                                        const MeasurementSet&, int,
                                        std::optional<int>);

  std::vector<DensityMatrix> states_;
  std::vector<int> depths_;
  std::vector<std::size_t> offsets_;  // (state * num_actions + action) rows
  std::vector<Transition> transitions_;
  int num_actions_ = 0;
  std::optional<int> truncated_at_;
  std::optional<StateId> target_id_;
};

/// Breadth-first closure of {rho0} under every (action, surviving outcome)
/// transition, deduplicated by canonical key with an exact entrywise check
/// (1e-9) against stored representatives. If `horizon` is given, expansion
/// stops after that many layers and the truncation depth is recorded.
/// Throws "state explosion" when more than `max_states` states are found.
StateGraph enumerate_reachable(const DensityMatrix& rho0,
                               const MeasurementSet& set,
                               int max_states = kDefaultMaxStates,
                               std::optional<int> horizon = std::nullopt);

/// Lowest state id passing is_target, if any.
std::optional<StateId> find_target_state(const StateGraph& graph,
                                         const DensityMatrix& target,
                                         double eps = kTargetEps);

}  // namespace qsteer
