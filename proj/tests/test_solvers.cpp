#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qsteer/evaluation.hpp"
#include "qsteer/solvers.hpp"
#include "testutil.hpp"

using namespace qsteer;
using namespace qsteer::test;

namespace {

MeasurementSet estar_only_set() {
  Matrix p0 = Matrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  Matrix p1 = Matrix::Zero(2, 2);
  p1(1, 1) = 1.0;
  std::vector<MeasurementOutcome> outcomes;
  outcomes.push_back({"0", std::move(p0)});
  outcomes.push_back({"1", std::move(p1)});
  std::vector<Measurement> actions;
  actions.emplace_back("E_*", std::move(outcomes));
  return MeasurementSet(std::move(actions), 0);
}

double bellman_rhs(const StateGraph& graph, const std::vector<double>& prev,
                   StateId x, int a) {
  double q = 0.0;
  for (const Transition& t : graph.transitions(x, a)) {
    q += t.probability * prev[t.next];
  }
  return q;
}

// The optimal policy for T = N = 5 as an action table keyed by state label,
// columns k = 0..4 (1-based action numbers).
const std::map<std::string, std::vector<int>> kReferenceHorizonFive = {
    {"|0>", {2, 2, 3, 3, 5}},     {"|1>", {5, 5, 5, 5, 5}},
    {"|phi_1>", {3, 3, 3, 3, 5}}, {"|psi_1>", {5, 5, 5, 5, 5}},
    {"|phi_2>", {4, 4, 3, 3, 5}}, {"|psi_2>", {1, 1, 1, 1, 5}},
    {"|phi_3>", {4, 4, 4, 4, 5}}, {"|psi_3>", {1, 1, 2, 2, 5}},
    {"|phi_4>", {5, 5, 5, 5, 5}}, {"|psi_4>", {2, 2, 2, 2, 5}},
};

// The optimal stationary policy for T = 5, keyed by state label.
const std::map<std::string, int> kReferenceStationary = {
    {"|0>", 2},     {"|1>", 5},     {"|phi_1>", 3}, {"|psi_1>", 5},
    {"|phi_2>", 4}, {"|psi_2>", 5}, {"|phi_3>", 5}, {"|psi_3>", 1},
    {"|phi_4>", 5}, {"|psi_4>", 2},
};

}  // namespace

TEST_CASE("max success: boundary cases") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);

  // One projective step from an orthogonal state cannot land on the target.
  const Policy one_step = solve_max_success(graph, set, 1, qubit_one());
  CHECK(one_step.values->stage[1][graph.initial_id()] == 0.0);

  // N = 0 leaves the initial state unmeasured.
  const Policy zero_steps = solve_max_success(graph, set, 0, qubit_one());
  CHECK(zero_steps.values->stage[0][graph.initial_id()] == 0.0);

  // From the target itself the value is 1 for any horizon.
  const StateGraph from_one = enumerate_reachable(qubit_one(), set);
  for (const int n : {1, 3, 6}) {
    const Policy p = solve_max_success(from_one, set, n, qubit_one());
    CHECK(p.values->stage[n][from_one.initial_id()] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("max success: T = N = 10 headline value") {
  const MeasurementSet set = build_standard_set(10);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_success(graph, set, 10, qubit_one());
  CHECK(p.values->stage[10][graph.initial_id()] ==
        doctest::Approx(0.9968).epsilon(0.0005));
}

TEST_CASE("max success: reference horizon-5 table achieves the optimal value") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy opt = solve_max_success(graph, set, 5, qubit_one());
  const double v = opt.values->stage[5][graph.initial_id()];

  Policy reference;
  reference.kind = Policy::Kind::markov;
  reference.horizon = 5;
  reference.markov.assign(5, std::vector<std::int32_t>(graph.num_states(), -1));
  for (const auto& [label, actions] : kReferenceHorizonFive) {
    const StateId s = state_by_label(graph, set, label);
    for (int k = 0; k < 5; ++k) reference.markov[k][s] = actions[k] - 1;
  }
  const double ref_value =
      evaluate_policy_exact(reference, graph, graph.initial_id(), qubit_one())
          .success_prob;
  CHECK(std::abs(ref_value - v) <= 1e-9);
}

TEST_CASE("max success: value is monotone in the horizon") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_success(graph, set, 6, qubit_one());
  for (int t = 0; t < 6; ++t) {
    for (StateId x = 0; x < graph.num_states(); ++x) {
      CHECK(p.values->stage[t + 1][x] >= p.values->stage[t][x] - 1e-12);
    }
  }
}

TEST_CASE("finite-horizon solvers satisfy their own recursion") {
  const MeasurementSet set = build_standard_set(4);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  for (const bool fidelity_objective : {false, true}) {
    const Policy p = fidelity_objective
                         ? solve_max_fidelity(graph, set, 4, qubit_one())
                         : solve_max_success(graph, set, 4, qubit_one());
    for (int s = 1; s <= 4; ++s) {
      for (StateId x = 0; x < graph.num_states(); ++x) {
        const std::int32_t a = p.markov[4 - s][x];
        REQUIRE(a >= 0);
        const double rhs = bellman_rhs(graph, p.values->stage[s - 1], x, a);
        CHECK(std::abs(p.values->stage[s][x] - rhs) <= 1e-12);
      }
    }
  }
}

TEST_CASE("layered horizon-truncated DP matches the closed-graph DP") {
  const MeasurementSet set = build_standard_set(4);
  const StateGraph closed = enumerate_reachable(qubit_zero(), set);
  const StateGraph layered = enumerate_reachable(qubit_zero(), set, 1000, 2);
  REQUIRE(layered.truncated_at() == 2);
  const Policy a = solve_max_success(closed, set, 2, qubit_one());
  const Policy b = solve_max_success(layered, set, 2, qubit_one());
  CHECK(std::abs(a.values->stage[2][0] - b.values->stage[2][0]) <= 1e-12);
  CHECK_THROWS_AS(solve_max_success(layered, set, 3, qubit_one()),
                  std::invalid_argument);

  // The truncated layering also supports non-projective sets.
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const MeasurementSet damping = damping_set();
  const StateGraph damped =
      enumerate_reachable(make_pure_state(plus), damping, 100, 3);
  const Policy p = solve_max_success(damped, damping, 3, qubit_zero());
  const double oracle =
      tree_max_success(damping, make_pure_state(plus), qubit_zero(), 3);
  CHECK(std::abs(p.values->stage[3][0] - oracle) <= 1e-10);
}

TEST_CASE("no history-dependent policy beats the Markov optimum") {
  for (int T = 2; T <= 4; ++T) {
    const MeasurementSet set = build_standard_set(T);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    for (int N = 1; N <= 3; ++N) {
      const Policy p = solve_max_success(graph, set, N, qubit_one());
      const double dp = p.values->stage[N][graph.initial_id()];
      const double enumerated =
          best_policy_by_enumeration(set, qubit_zero(), qubit_one(), N);
      CHECK(enumerated <= dp + 1e-10);
      CHECK(std::abs(enumerated - dp) <= 1e-10);
    }
    // Depth 4 via the tree recursion oracle.
    const Policy p4 = solve_max_success(graph, set, 4, qubit_one());
    const double oracle = tree_max_success(set, qubit_zero(), qubit_one(), 4);
    CHECK(std::abs(p4.values->stage[4][graph.initial_id()] - oracle) <= 1e-10);
  }
}

TEST_CASE("max fidelity: terminal-only horizon") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_fidelity(graph, set, 0, qubit_one());
  CHECK(p.values->stage[0][graph.initial_id()] == 0.0);
}

TEST_CASE("success at N equals fidelity at N-1 with a final projection") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const int estar = *set.target_action_index();
  for (int N = 2; N <= 6; ++N) {
    const Policy success = solve_max_success(graph, set, N, qubit_one());
    const Policy fid = solve_max_fidelity(graph, set, N - 1, qubit_one());
    const double j_succ = success.values->stage[N][graph.initial_id()];
    const double j_fid = fid.values->stage[N - 1][graph.initial_id()];
    CHECK(std::abs(j_succ - j_fid) <= 1e-9);

    const Policy composite =
        append_final_action(fid, estar, graph.num_states());
    const double composed =
        evaluate_policy_exact(composite, graph, graph.initial_id(),
                              qubit_one())
            .success_prob;
    CHECK(std::abs(composed - j_succ) <= 1e-9);
  }
}

TEST_CASE("min arrival: boundary and reference values") {
  const MeasurementSet set = build_standard_set(5);

  // From the target the expected arrival time is zero.
  const StateGraph from_one = enumerate_reachable(qubit_one(), set);
  const Policy at_target = solve_min_arrival(from_one, set, qubit_one());
  CHECK(at_target.values->stationary[from_one.initial_id()] == 0.0);

  // T = 2 evaluates exactly to 4: one 45-degree step, then repeated
  // project-or-restart rounds at probability 1/2.
  const MeasurementSet set2 = build_standard_set(2);
  const StateGraph g2 = enumerate_reachable(qubit_zero(), set2);
  const Policy p2 = solve_min_arrival(g2, set2, qubit_one());
  CHECK(p2.values->stationary[g2.initial_id()] ==
        doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("min arrival: oscillates around 3.8 across set sizes") {
  double sum = 0.0;
  int count = 0;
  for (int T = 2; T <= 30; ++T) {
    const MeasurementSet set = build_standard_set(T);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy p = solve_min_arrival(graph, set, qubit_one());
    const double v = p.values->stationary[graph.initial_id()];
    CHECK(v >= 3.0);
    CHECK(v <= 4.5);
    sum += v;
    ++count;
  }
  const double mean = sum / count;
  CHECK(mean >= 3.6);
  CHECK(mean <= 4.0);
}

TEST_CASE("min arrival: improper instances are rejected") {
  const MeasurementSet only_estar = estar_only_set();

  // |0> is a fixed point of the target projector; the target is unreachable.
  const StateGraph g0 = enumerate_reachable(qubit_zero(), only_estar);
  CHECK_THROWS_WITH_AS(solve_min_arrival(g0, only_estar, qubit_one()),
                       "no proper policy", std::runtime_error);

  // From a superposition the first projection may trap the chain in |0>,
  // so no policy arrives almost surely and the expectation diverges.
  const MeasurementSet set2 = build_standard_set(2);
  const DensityMatrix phi1(set2.action(0).outcomes()[0].kraus);
  const StateGraph g1 = enumerate_reachable(phi1, only_estar);
  CHECK_THROWS_WITH_AS(solve_min_arrival(g1, only_estar, qubit_one()),
                       "no proper policy", std::runtime_error);

  // Truncated graphs are not accepted.
  const MeasurementSet set5 = build_standard_set(5);
  const StateGraph truncated =
      enumerate_reachable(qubit_zero(), set5, 1000, 1);
  CHECK_THROWS_AS(solve_min_arrival(truncated, set5, qubit_one()),
                  std::invalid_argument);

  // A one-sweep budget cannot converge.
  const StateGraph g5 = enumerate_reachable(qubit_zero(), set5);
  CHECK_THROWS_WITH_AS(solve_min_arrival(g5, set5, qubit_one(), 1),
                       "not converged", std::runtime_error);
}

TEST_CASE("min arrival: converged values are self-consistent") {
  const MeasurementSet set = build_standard_set(6);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const double tol = 1e-12;
  const Policy p = solve_min_arrival(graph, set, qubit_one(), 100000, tol);
  const std::vector<double>& v = p.values->stationary;

  for (StateId x = 0; x < graph.num_states(); ++x) {
    REQUIRE_FALSE(p.values->unreachable(x));
    if (is_target(graph.state(x), qubit_one())) continue;
    const std::int32_t a = p.stationary_choice[x];
    REQUIRE(a >= 0);
    const double rhs = 1.0 + bellman_rhs(graph, v, x, a);
    CHECK(std::abs(v[x] - rhs) <= 10.0 * tol);
  }

  // Residuals shrink monotonically after the first sweep.
  const auto& res = p.convergence_residuals;
  REQUIRE(res.size() >= 2);
  for (std::size_t i = 1; i + 1 < res.size(); ++i) {
    CHECK(res[i + 1] <= res[i] + 1e-15);
  }
}

TEST_CASE("min arrival: stationary policy matches the reference table") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_min_arrival(graph, set, qubit_one());
  const std::vector<double>& v = p.values->stationary;
  const auto labels = state_labels(graph, set);

  for (StateId x = 0; x < graph.num_states(); ++x) {
    if (is_target(graph.state(x), qubit_one())) continue;
    // Gap between the best and second-best action.
    double best = 1e18;
    double second = 1e18;
    for (int a = 0; a < set.size(); ++a) {
      const double q = 1.0 + bellman_rhs(graph, v, x, a);
      if (q < best) {
        second = best;
        best = q;
      } else if (q < second) {
        second = q;
      }
    }
    const int expected = kReferenceStationary.at(labels[x]) - 1;
    if (second - best > 1e-9) {
      CHECK(p.stationary_choice[x] == expected);
    } else {
      MESSAGE("tied minimum at ", labels[x], " (gap ", second - best,
              "); solver chose E_", p.stationary_choice[x] + 1);
    }
  }
  // The target row of the reference table is reproduced by the greedy rule.
  const StateId one = state_by_label(graph, set, "|1>");
  CHECK(p.stationary_choice[one] == kReferenceStationary.at("|1>") - 1);
}
