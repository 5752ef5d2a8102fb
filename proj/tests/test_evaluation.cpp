#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qsteer/evaluation.hpp"
#include "qsteer/solvers.hpp"
#include "testutil.hpp"

using namespace qsteer;
using namespace qsteer::test;

TEST_CASE("naive policy construction") {
  const MeasurementSet set = build_standard_set(5);
  const Policy p = make_naive_policy(set, 5);
  CHECK(p.kind == Policy::Kind::deterministic_sequence);
  CHECK(p.sequence == std::vector<std::int32_t>{0, 1, 2, 3, 4});

  CHECK(make_naive_policy(set, 1).sequence == std::vector<std::int32_t>{0});
  CHECK(make_naive_policy(set, 0).sequence.empty());
  CHECK_THROWS_AS(make_naive_policy(set, 6), std::invalid_argument);
}

TEST_CASE("s1 policy construction") {
  const MeasurementSet set = build_standard_set(3);
  const Policy p = make_s1_policy(set);
  REQUIRE(p.kind == Policy::Kind::markov);
  REQUIRE(p.horizon == 3);

  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const StateId zero = state_by_label(graph, set, "|0>");
  const StateId phi1 = state_by_label(graph, set, "|phi_1>");
  const StateId psi1 = state_by_label(graph, set, "|psi_1>");
  CHECK(p.action_at(0, zero) == 0);   // E_1
  CHECK(p.action_at(1, psi1) == 2);   // E_3 after seeing psi_1
  CHECK(p.action_at(1, phi1) == 1);   // E_2 otherwise
  CHECK(p.action_at(2, phi1) == 2);   // E_3 last

  CHECK_THROWS_AS(make_s1_policy(build_standard_set(4)),
                  std::invalid_argument);
}

TEST_CASE("exact evaluation reproduces the benchmark success probabilities") {
  // T = N = 3 naive: 0.5625, by direct expansion of the three branches.
  {
    const MeasurementSet set = build_standard_set(3);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy naive = make_naive_policy(set, 3);
    const auto ev =
        evaluate_policy_exact(naive, graph, graph.initial_id(), qubit_one());
    CHECK(ev.success_prob == doctest::Approx(0.5625).epsilon(1e-12));
    CHECK(ev.success_prob >= 0.55);
    CHECK(ev.success_prob <= 0.57);

    const Policy s1 = make_s1_policy(set);
    const auto ev_s1 =
        evaluate_policy_exact(s1, graph, graph.initial_id(), qubit_one());
    CHECK(ev_s1.success_prob == doctest::Approx(0.65625).epsilon(1e-12));
    CHECK(ev_s1.success_prob >= 0.65);
    CHECK(ev_s1.success_prob <= 0.67);
  }

  // T = N = 10 naive: near 0.8; cross-checked against the matrix-level
  // recursion, which never touches the state graph.
  {
    const MeasurementSet set = build_standard_set(10);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy naive = make_naive_policy(set, 10);
    const auto ev =
        evaluate_policy_exact(naive, graph, graph.initial_id(), qubit_one());
    CHECK(ev.success_prob >= 0.79);
    CHECK(ev.success_prob <= 0.81);

    const double oracle = success_by_matrix_recursion(
        set, qubit_zero(), qubit_one(), 0, 10,
        [](int step, const DensityMatrix&) { return step; });
    CHECK(std::abs(ev.success_prob - oracle) <= 1e-10);
  }
}

TEST_CASE("exact evaluation conserves probability mass") {
  const MeasurementSet set = build_standard_set(6);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_success(graph, set, 6, qubit_one());
  const auto ev =
      evaluate_policy_exact(p, graph, graph.initial_id(), qubit_one());
  REQUIRE(ev.by_step.size() == 7);
  for (const StateDistribution& d : ev.by_step) {
    CHECK(std::abs(d.total() - 1.0) <= 1e-10);
    for (const double q : d.probs) CHECK(q >= 0.0);
  }
}

TEST_CASE("forward evaluation agrees with the backward value") {
  for (int N = 3; N <= 10; ++N) {
    const MeasurementSet set = build_standard_set(N);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy p = solve_max_success(graph, set, N, qubit_one());
    const auto ev =
        evaluate_policy_exact(p, graph, graph.initial_id(), qubit_one());
    CHECK(std::abs(ev.success_prob -
                   p.values->stage[N][graph.initial_id()]) <= 1e-10);

    const Policy f = solve_max_fidelity(graph, set, N, qubit_one());
    const auto evf =
        evaluate_policy_exact(f, graph, graph.initial_id(), qubit_one());
    CHECK(std::abs(evf.fidelity_expectation -
                   f.values->stage[N][graph.initial_id()]) <= 1e-10);
  }
}

TEST_CASE("naive success is monotone in the set size") {
  double previous = 0.0;
  for (int T = 3; T <= 10; ++T) {
    const MeasurementSet set = build_standard_set(T);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy naive = make_naive_policy(set, T);
    const double p =
        evaluate_policy_exact(naive, graph, graph.initial_id(), qubit_one())
            .success_prob;
    CHECK(p >= previous);
    previous = p;
  }
}

TEST_CASE("evaluation rejects unusable inputs") {
  const MeasurementSet set = build_standard_set(3);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);

  Policy stationary;
  stationary.kind = Policy::Kind::stationary;
  stationary.stationary_choice.assign(graph.num_states(), 0);
  CHECK_THROWS_AS(
      evaluate_policy_exact(stationary, graph, 0, qubit_one()),
      std::invalid_argument);

  // A Markov policy over a smaller graph leaves reachable states unmapped.
  Policy undersized;
  undersized.kind = Policy::Kind::markov;
  undersized.horizon = 2;
  undersized.markov.assign(2, std::vector<std::int32_t>(1, 0));
  CHECK_THROWS_AS(evaluate_policy_exact(undersized, graph, 0, qubit_one()),
                  std::runtime_error);
}

TEST_CASE("simulation matches the exact law at 100k trials") {
  const MeasurementSet set = build_standard_set(10);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_success(graph, set, 10, qubit_one());
  const double exact = p.values->stage[10][graph.initial_id()];

  const SimulationResult sim =
      simulate(p, set, qubit_zero(), qubit_one(), 100000, 12345);
  const double sigma = std::sqrt(exact * (1.0 - exact) / 100000.0);
  CHECK(std::abs(sim.success_rate - exact) <= 4.0 * sigma);
  CHECK(sim.trials == 100000);
}

TEST_CASE("simulation matches the exact law for the benchmark policies") {
  {
    const MeasurementSet set = build_standard_set(10);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy naive = make_naive_policy(set, 10);
    const double exact =
        evaluate_policy_exact(naive, graph, graph.initial_id(), qubit_one())
            .success_prob;
    const SimulationResult sim =
        simulate(naive, set, qubit_zero(), qubit_one(), 100000, 4242);
    const double sigma = std::sqrt(exact * (1.0 - exact) / 100000.0);
    CHECK(std::abs(sim.success_rate - exact) <= 4.0 * sigma);
  }
  {
    const MeasurementSet set = build_standard_set(3);
    const StateGraph graph = enumerate_reachable(qubit_zero(), set);
    const Policy s1 = make_s1_policy(set);
    const double exact =
        evaluate_policy_exact(s1, graph, graph.initial_id(), qubit_one())
            .success_prob;
    const SimulationResult sim =
        simulate(s1, set, qubit_zero(), qubit_one(), 100000, 4242);
    const double sigma = std::sqrt(exact * (1.0 - exact) / 100000.0);
    CHECK(std::abs(sim.success_rate - exact) <= 4.0 * sigma);
  }
}

TEST_CASE("simulation estimates the expected arrival time") {
  const MeasurementSet set = build_standard_set(5);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_min_arrival(graph, set, qubit_one());
  const double exact = p.values->stationary[graph.initial_id()];

  const SimulationResult sim =
      simulate(p, set, qubit_zero(), qubit_one(), 100000, 777, 100000);
  REQUIRE(sim.arrived_trials == sim.trials);
  double ss = 0.0;
  for (const TrajectoryRecord& r : sim.records) {
    REQUIRE(r.arrived);
    REQUIRE(r.arrival_step.has_value());
    const double d = static_cast<double>(*r.arrival_step) - sim.mean_arrival;
    ss += d * d;
  }
  const double se =
      std::sqrt(ss / (sim.trials - 1)) / std::sqrt(double(sim.trials));
  CHECK(std::abs(sim.mean_arrival - exact) <= 4.0 * se);
}

TEST_CASE("repeating the target projection from the target is certain") {
  Matrix p0 = Matrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  Matrix p1 = Matrix::Zero(2, 2);
  p1(1, 1) = 1.0;
  std::vector<MeasurementOutcome> outcomes;
  outcomes.push_back({"0", std::move(p0)});
  outcomes.push_back({"1", std::move(p1)});
  std::vector<Measurement> actions;
  actions.emplace_back("E_*", std::move(outcomes));
  const MeasurementSet set(std::move(actions), 0);

  Policy repeat;
  repeat.kind = Policy::Kind::stationary;
  repeat.stationary_choice = {0};

  const SimulationResult sim =
      simulate(repeat, set, qubit_one(), qubit_one(), 1000, 9);
  CHECK(sim.success_rate == 1.0);
  CHECK(sim.mean_arrival == 0.0);
  for (const TrajectoryRecord& r : sim.records) {
    CHECK(r.arrival_step == 0);
    CHECK(r.steps.empty());
  }
}

TEST_CASE("per-trial substreams are independent of the trial count") {
  const MeasurementSet set = build_standard_set(4);
  const StateGraph graph = enumerate_reachable(qubit_zero(), set);
  const Policy p = solve_max_success(graph, set, 4, qubit_one());

  const SimulationResult small =
      simulate(p, set, qubit_zero(), qubit_one(), 200, 31415);
  const SimulationResult large =
      simulate(p, set, qubit_zero(), qubit_one(), 1000, 31415);
  for (int i = 0; i < 200; ++i) {
    const TrajectoryRecord& a = small.records[i];
    const TrajectoryRecord& b = large.records[i];
    CHECK(a.stream_seed == b.stream_seed);
    CHECK(a.arrived == b.arrived);
    CHECK(a.arrival_step == b.arrival_step);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      CHECK(a.steps[k].action == b.steps[k].action);
      CHECK(a.steps[k].outcome == b.steps[k].outcome);
      CHECK(a.steps[k].state == b.steps[k].state);
    }
  }

  // Same call twice: identical aggregate.
  const SimulationResult again =
      simulate(p, set, qubit_zero(), qubit_one(), 200, 31415);
  CHECK(again.success_rate == small.success_rate);
}
