#include "qsteer/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qsteer/rng.hpp"

namespace qsteer {

double StateDistribution::total() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

Policy make_naive_policy(const MeasurementSet& set, int N) {
  if (N < 0) {
    throw std::invalid_argument("naive policy: negative horizon");
  }
  if (N > set.size()) {
    throw std::invalid_argument(
        "naive policy: horizon exceeds the number of actions");
  }
  Policy policy;
  policy.kind = Policy::Kind::deterministic_sequence;
  policy.horizon = N;
  policy.sequence.resize(N);
  std::iota(policy.sequence.begin(), policy.sequence.end(), 0);
  return policy;
}

Policy make_s1_policy(const MeasurementSet& set) {
  const MeasurementSet reference = build_standard_set(3);
  if (set.size() != 3 || set.dim() != 2) {
    throw std::invalid_argument("S1 policy requires the standard T=3 set");
  }
  for (int a = 0; a < 3; ++a) {
    const auto& got = set.action(a).outcomes();
    const auto& want = reference.action(a).outcomes();
    if (got.size() != want.size()) {
      throw std::invalid_argument("S1 policy requires the standard T=3 set");
    }
    for (std::size_t y = 0; y < got.size(); ++y) {
      if (max_abs_diff(got[y].kraus, want[y].kraus) > kConstructionTol) {
        throw std::invalid_argument("S1 policy requires the standard T=3 set");
      }
    }
  }

  // Enumeration is deterministic, so the ids below match any graph built
  // from |0><0| and this set.
  Vector zero(2);
  zero << 1.0, 0.0;
  const StateGraph graph = enumerate_reachable(make_pure_state(zero), set);
  const Matrix psi1 = set.action(0).outcomes()[1].kraus;
  StateId psi1_id = -1;
  for (StateId s = 0; s < graph.num_states(); ++s) {
    if (max_abs_diff(graph.state(s).matrix(), psi1) <= kComparisonTol) {
      psi1_id = s;
      break;
    }
  }
  if (psi1_id < 0) {
    throw std::invalid_argument("S1 policy: psi_1 state not found");
  }

  const int S = graph.num_states();
  Policy policy;
  policy.kind = Policy::Kind::markov;
  policy.horizon = 3;
  policy.markov.assign(3, std::vector<std::int32_t>(S, 0));
  std::fill(policy.markov[0].begin(), policy.markov[0].end(), 0);  // E_1
  std::fill(policy.markov[1].begin(), policy.markov[1].end(), 1);  // E_2
  policy.markov[1][psi1_id] = 2;                                   // E_3
  std::fill(policy.markov[2].begin(), policy.markov[2].end(), 2);  // E_3
  return policy;
}

EvaluationResult evaluate_policy_exact(const Policy& policy,
                                       const StateGraph& graph,
                                       StateId rho0_id,
                                       const DensityMatrix& target,
                                       double eps) {
  if (policy.kind == Policy::Kind::stationary) {
    throw std::invalid_argument(
        "exact evaluation needs a finite-horizon policy");
  }
  if (rho0_id < 0 || rho0_id >= graph.num_states()) {
    throw std::invalid_argument("initial state id out of range");
  }
  const int N = policy.horizon;
  if (graph.truncated_at() && *graph.truncated_at() < N) {
    throw std::invalid_argument("graph truncated shallower than the horizon");
  }

  const int S = graph.num_states();
  EvaluationResult result;
  result.by_step.reserve(N + 1);
  StateDistribution current;
  current.probs.assign(S, 0.0);
  current.probs[rho0_id] = 1.0;
  result.by_step.push_back(current);

  for (int k = 0; k < N; ++k) {
    StateDistribution next;
    next.probs.assign(S, 0.0);
    for (StateId x = 0; x < S; ++x) {
      const double p = current.probs[x];
      if (p <= 0.0) continue;
      const std::int32_t a = policy.action_at(k, x);
      if (a < 0 || a >= graph.num_actions()) {
        throw std::runtime_error(
            "policy does not define an action for a reachable state");
      }
      for (const Transition& t : graph.transitions(x, a)) {
        next.probs[t.next] += p * t.probability;
      }
    }
    current = std::move(next);
    result.by_step.push_back(current);
  }

  for (StateId x = 0; x < S; ++x) {
    const double p = result.by_step[N].probs[x];
    if (p <= 0.0) continue;
    const double overlap =
        (graph.state(x).matrix() * target.matrix()).trace().real();
    result.fidelity_expectation += p * std::clamp(overlap, 0.0, 1.0);
    if (is_target(graph.state(x), target, eps)) {
      result.success_prob += p;
    }
  }
  return result;
}

SimulationResult simulate(const Policy& policy, const MeasurementSet& set,
                          const DensityMatrix& rho0,
                          const DensityMatrix& target, std::int64_t trials,
                          std::uint64_t seed, int max_steps) {
  if (trials < 1) {
    throw std::invalid_argument("simulate: trials must be >= 1");
  }
  const bool stationary = policy.kind == Policy::Kind::stationary;
  if (!stationary && policy.horizon > max_steps) {
    max_steps = policy.horizon;
  }
  const std::optional<int> horizon =
      stationary ? std::nullopt : std::optional<int>(policy.horizon);
  const StateGraph graph = enumerate_reachable(rho0, set, kDefaultMaxStates,
                                               horizon);

  const int S = graph.num_states();
  std::vector<bool> goal(S, false);
  for (StateId s = 0; s < S; ++s) {
    goal[s] = is_target(graph.state(s), target);
  }

  SimulationResult result;
  result.trials = trials;
  result.records.reserve(trials);
  double arrival_sum = 0.0;

  const int steps = stationary ? max_steps : policy.horizon;
  for (std::int64_t i = 0; i < trials; ++i) {
    SplitMix64 rng(seed ^ static_cast<std::uint64_t>(i));
    TrajectoryRecord record;
    record.stream_seed = seed ^ static_cast<std::uint64_t>(i);

    StateId state = graph.initial_id();
    std::optional<int> first_hit;
    if (goal[state]) first_hit = 0;

    for (int k = 0; k < steps; ++k) {
      if (stationary && first_hit) break;
      const std::int32_t a = policy.action_at(k, state);
      if (a < 0 || a >= graph.num_actions()) {
        throw std::runtime_error(
            "policy does not define an action for a reachable state");
      }
      const auto outs = graph.transitions(state, a);
      if (outs.empty()) {
        throw std::runtime_error(
            "graph has no transitions for a reachable state");
      }
      const double u = rng.uniform01();
      double acc = 0.0;
      const Transition* chosen = &outs.back();
      for (const Transition& t : outs) {
        acc += t.probability;
        if (u < acc) {
          chosen = &t;
          break;
        }
      }
      state = chosen->next;
      record.steps.push_back({a, chosen->outcome, state});
      if (!first_hit && goal[state]) {
        first_hit = k + 1;
      }
    }

    record.arrived = stationary ? first_hit.has_value() : goal[state];
    if (record.arrived) {
      record.arrival_step = first_hit;
      arrival_sum += static_cast<double>(*first_hit);
      ++result.arrived_trials;
    }
    result.records.push_back(std::move(record));
  }

  result.success_rate =
      static_cast<double>(result.arrived_trials) / static_cast<double>(trials);
  result.mean_arrival =
      result.arrived_trials > 0
          ? arrival_sum / static_cast<double>(result.arrived_trials)
          : std::numeric_limits<double>::quiet_NaN();
  return result;
}

}  // namespace qsteer
