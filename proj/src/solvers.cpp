#include "qsteer/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qsteer {

std::int32_t Policy::action_at(int step, StateId s) const {
  switch (kind) {
    case Kind::markov:
      if (step < 0 || step >= static_cast<int>(markov.size())) return -1;
      if (s < 0 || s >= static_cast<StateId>(markov[step].size())) return -1;
      return markov[step][s];
    case Kind::stationary:
      if (s < 0 || s >= static_cast<StateId>(stationary_choice.size()))
        return -1;
      return stationary_choice[s];
    case Kind::deterministic_sequence:
      if (step < 0 || step >= static_cast<int>(sequence.size())) return -1;
      return sequence[step];
  }
  return -1;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Actions within this distance of the optimum count as tied; the lowest
// index wins so that rounding noise cannot decide ties.
constexpr double kTieTol = 1e-12;

std::vector<double> target_indicator(const StateGraph& graph,
                                     const DensityMatrix& target, double eps) {
  std::vector<double> v(graph.num_states());
  for (StateId s = 0; s < graph.num_states(); ++s) {
    v[s] = is_target(graph.state(s), target, eps) ? 1.0 : 0.0;
  }
  return v;
}

std::vector<double> target_overlap(const StateGraph& graph,
                                   const DensityMatrix& target) {
  std::vector<double> v(graph.num_states());
  for (StateId s = 0; s < graph.num_states(); ++s) {
    const double o =
        (graph.state(s).matrix() * target.matrix()).trace().real();
    v[s] = std::clamp(o, 0.0, 1.0);
  }
  return v;
}

// Backward induction over the reachable graph. On a truncated graph the
// stage-s value is computed only for states first reached at depth <= N - s;
// every successor it reads is then defined one stage earlier.
Policy backward_induction(const StateGraph& graph, const MeasurementSet& set,
                          int N, std::vector<double> terminal) {
  if (N < 0) {
    throw std::invalid_argument("horizon must be non-negative");
  }
  if (graph.truncated_at() && *graph.truncated_at() < N) {
    throw std::invalid_argument("graph truncated shallower than the horizon");
  }
  const int S = graph.num_states();
  const int A = set.size();
  const bool layered = graph.truncated_at().has_value();

  Policy policy;
  policy.kind = Policy::Kind::markov;
  policy.horizon = N;
  policy.markov.assign(N, std::vector<std::int32_t>(S, -1));

  ValueTable table;
  table.kind = ValueTable::Kind::finite_horizon;
  table.horizon = N;
  table.stage.assign(N + 1, std::vector<double>(S, 0.0));
  table.stage[0] = std::move(terminal);

  std::vector<double> q(A);
  for (int s = 1; s <= N; ++s) {
    const std::vector<double>& prev = table.stage[s - 1];
    for (StateId x = 0; x < S; ++x) {
      if (layered && graph.depth(x) > N - s) continue;
      double best = -1.0;
      for (int a = 0; a < A; ++a) {
        q[a] = 0.0;
        for (const Transition& t : graph.transitions(x, a)) {
          q[a] += t.probability * prev[t.next];
        }
        best = std::max(best, q[a]);
      }
      std::int32_t best_action = 0;
      while (q[best_action] < best - kTieTol) ++best_action;
      table.stage[s][x] = std::clamp(best, 0.0, 1.0);
      policy.markov[N - s][x] = best_action;
    }
  }
  policy.values = std::move(table);
  return policy;
}

// States from which some policy reaches the goal set almost surely:
// greatest fixpoint over Z of the least fixpoint over Y of states having an
// action whose outcomes all stay in Z and hit Y with positive probability.
std::vector<bool> almost_sure_reach(const StateGraph& graph,
                                    const std::vector<bool>& goal) {
  const int S = graph.num_states();
  const int A = graph.num_actions();
  std::vector<bool> z(S, true);
  while (true) {
    std::vector<bool> y(S, false);
    for (StateId s = 0; s < S; ++s) y[s] = goal[s] && z[s];
    bool y_changed = true;
    while (y_changed) {
      y_changed = false;
      for (StateId x = 0; x < S; ++x) {
        if (y[x] || !z[x]) continue;
        for (int a = 0; a < A; ++a) {
          bool stays = true;
          bool hits = false;
          for (const Transition& t : graph.transitions(x, a)) {
            if (!z[t.next]) stays = false;
            if (y[t.next]) hits = true;
          }
          if (stays && hits) {
            y[x] = true;
            y_changed = true;
            break;
          }
        }
      }
    }
    if (y == z) return z;
    z = std::move(y);
  }
}

}  // namespace

Policy solve_max_success(const StateGraph& graph, const MeasurementSet& set,
                         int N, const DensityMatrix& target, double eps) {
  if (graph.num_actions() != set.size()) {
    throw std::invalid_argument("graph was built from a different action set");
  }
  return backward_induction(graph, set, N, target_indicator(graph, target, eps));
}

Policy solve_max_fidelity(const StateGraph& graph, const MeasurementSet& set,
                          int N, const DensityMatrix& target) {
  if (graph.num_actions() != set.size()) {
    throw std::invalid_argument("graph was built from a different action set");
  }
  return backward_induction(graph, set, N, target_overlap(graph, target));
}

Policy solve_min_arrival(const StateGraph& graph, const MeasurementSet& set,
                         const DensityMatrix& target, int max_iters,
                         double tol, double eps) {
  if (graph.num_actions() != set.size()) {
    throw std::invalid_argument("graph was built from a different action set");
  }
  if (graph.truncated_at()) {
    throw std::invalid_argument(
        "minimal arrival time requires a fully closed graph");
  }
  const int S = graph.num_states();
  const int A = set.size();

  std::vector<bool> goal(S, false);
  for (StateId s = 0; s < S; ++s) {
    goal[s] = is_target(graph.state(s), target, eps);
  }
  // Improper states diverge under value iteration; resolve them up front so
  // the sweep below converges on the rest.
  const std::vector<bool> proper = almost_sure_reach(graph, goal);

  std::vector<double> value(S, 0.0);
  for (StateId s = 0; s < S; ++s) {
    if (!proper[s]) value[s] = kInf;
  }

  Policy policy;
  policy.kind = Policy::Kind::stationary;
  policy.stationary_choice.assign(S, -1);

  std::vector<double> next(S, 0.0);
  bool converged = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    double residual = 0.0;
    for (StateId x = 0; x < S; ++x) {
      if (!proper[x]) {
        next[x] = kInf;
        continue;
      }
      if (goal[x]) {
        next[x] = 0.0;
        continue;
      }
      double best = kInf;
      for (int a = 0; a < A; ++a) {
        double q = 1.0;
        for (const Transition& t : graph.transitions(x, a)) {
          q += t.probability * value[t.next];
        }
        if (q < best) best = q;
      }
      next[x] = best;
      residual = std::max(residual, std::abs(next[x] - value[x]));
    }
    value.swap(next);
    policy.convergence_residuals.push_back(residual);
    if (residual <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error("not converged");
  }

  // Greedy stationary policy from the converged values; goal states keep the
  // action that immediately returns to the goal.
  std::vector<double> q(A);
  for (StateId x = 0; x < S; ++x) {
    if (!proper[x]) continue;
    double best = kInf;
    for (int a = 0; a < A; ++a) {
      q[a] = 1.0;
      for (const Transition& t : graph.transitions(x, a)) {
        q[a] += t.probability * value[t.next];
      }
      best = std::min(best, q[a]);
    }
    std::int32_t best_action = 0;
    while (q[best_action] > best + kTieTol) ++best_action;
    policy.stationary_choice[x] = best_action;
  }

  ValueTable table;
  table.kind = ValueTable::Kind::stationary;
  table.stationary = std::move(value);
  policy.values = std::move(table);

  if (policy.values->unreachable(graph.initial_id())) {
    throw std::runtime_error("no proper policy");
  }
  return policy;
}

}  // namespace qsteer
