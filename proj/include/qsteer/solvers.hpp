#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qsteer/state_graph.hpp"

namespace qsteer {

// Stationary values above this cap mark states from which no policy reaches
// the target almost surely.
inline constexpr double kValueCap = 1e6;
inline constexpr int kDefaultMaxIters = 100000;
inline constexpr double kDefaultValueIterTol = 1e-12;

/// Value table of a solved objective. Finite-horizon tables are indexed by
/// stages remaining (stage[0] is the terminal condition); stationary tables
/// hold one value per state, +infinity for states with no proper policy.
struct ValueTable {
  enum class Kind { finite_horizon, stationary };

  Kind kind = Kind::finite_horizon;
  int horizon = 0;
  std::vector<std::vector<double>> stage;  // [stages_remaining][state]
  std::vector<double> stationary;          // [state]

  bool unreachable(StateId s) const { return !(stationary[s] <= kValueCap); }
};

/// A measurement-selection rule. Markov policies map (step, state) to an
/// action, stationary policies map state to action, and deterministic
/// sequences fix one action per step. Action -1 marks pairs the policy does
/// not define (states that cannot occur at that step, or improper states).
struct Policy {
  enum class Kind { markov, stationary, deterministic_sequence };

  Kind kind = Kind::markov;
  int horizon = 0;
  std::vector<std::vector<std::int32_t>> markov;  // [step][state]
  std::vector<std::int32_t> stationary_choice;    // [state]
  std::vector<std::int32_t> sequence;             // [step]
  std::optional<ValueTable> values;
  std::vector<double> convergence_residuals;  // value-iteration trace

  std::int32_t action_at(int step, StateId s) const;
};

/// Maximal probability of the state being exactly the target after N steps.
/// Backward recursion over the graph with terminal value 1 on target states
/// and 0 elsewhere; ties broken toward the lowest action index. The optimal
/// value is values->stage[N][graph.initial_id()].
Policy solve_max_success(const StateGraph& graph, const MeasurementSet& set,
                         int N, const DensityMatrix& target,
                         double eps = kTargetEps);

/// Maximal expected squared overlap with the pure target after N steps
/// (terminal value tr(x * target)). Same recursion shape as the success
/// objective.
Policy solve_max_fidelity(const StateGraph& graph, const MeasurementSet& set,
                          int N, const DensityMatrix& target);

/// Minimal expected number of steps to reach the target: value iteration for
/// the stochastic-shortest-path recursion V(x) = 1 + min_u sum_y P V(next),
/// V(target) = 0. States from which no policy arrives almost surely are
/// flagged unreachable (+infinity). Throws "no proper policy" when the
/// initial state is improper and "not converged" when max_iters is hit.
Policy solve_min_arrival(const StateGraph& graph, const MeasurementSet& set,
                         const DensityMatrix& target,
                         int max_iters = kDefaultMaxIters,
                         double tol = kDefaultValueIterTol,
                         double eps = kTargetEps);

}  // namespace qsteer
