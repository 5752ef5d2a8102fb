#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qsteer/solvers.hpp"
#include "qsteer/state_graph.hpp"

namespace qsteer {

/// Exact law of the state chain at one step: probability per state id.
struct StateDistribution {
  std::vector<double> probs;

  double total() const;
};

struct TrajectoryStep {
  std::int32_t action;
  std::int32_t outcome;
  StateId state;  // state after the measurement
};

struct TrajectoryRecord {
  std::uint64_t stream_seed = 0;
  std::vector<TrajectoryStep> steps;
  bool arrived = false;
  std::optional<int> arrival_step;  // present iff arrived
};

/// The fixed sweep E_1, E_2, ..., E_N with no feedback. Requires N <= T.
Policy make_naive_policy(const MeasurementSet& set, int N);

/// The one-bit-feedback benchmark for the standard T = 3 set, horizon 3:
/// E_1 first; then E_3 if the first outcome was psi_1 and E_2 otherwise;
/// E_3 last. State ids refer to the graph enumerated from |0><0|.
Policy make_s1_policy(const MeasurementSet& set);

struct EvaluationResult {
  double success_prob = 0.0;          // mass on target states at the horizon
  double fidelity_expectation = 0.0;  // E[tr(rho_N * target)]
  std::vector<StateDistribution> by_step;
};

/// Exact forward propagation of the outcome distribution under a
/// finite-horizon policy (markov or deterministic sequence).
EvaluationResult evaluate_policy_exact(const Policy& policy,
                                       const StateGraph& graph,
                                       StateId rho0_id,
                                       const DensityMatrix& target,
                                       double eps = kTargetEps);

struct SimulationResult {
  double success_rate = 0.0;
  double mean_arrival = 0.0;  // over arrived trials; NaN when none arrived
  std::int64_t arrived_trials = 0;
  std::int64_t trials = 0;
  std::vector<TrajectoryRecord> records;
};

/// Seeded Monte Carlo rollout of a policy. Trial i draws from the SplitMix64
/// substream seeded with (seed ^ i). Finite-horizon policies run exactly
/// `horizon` steps and count success on the final state; stationary policies
/// stop at first arrival, bounded by max_steps.
SimulationResult simulate(const Policy& policy, const MeasurementSet& set,
                          const DensityMatrix& rho0,
                          const DensityMatrix& target, std::int64_t trials,
                          std::uint64_t seed, int max_steps = 10000);

}  // namespace qsteer
