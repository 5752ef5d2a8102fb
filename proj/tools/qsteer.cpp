// qsteer: measurement-selection feedback policies for steering a quantum
// state to a target by sequential measurements.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qsteer/evaluation.hpp"
#include "qsteer/io.hpp"
#include "qsteer/measurement.hpp"
#include "qsteer/solvers.hpp"
#include "qsteer/state_graph.hpp"

using nlohmann::json;
using namespace qsteer;

namespace {

struct Options {
  std::string objective = "success";
  std::string policy = "optimal";
  std::string sweep_name;
  int T = 0;        // 0 = unset
  int N = -1;       // -1 = unset
  std::string set_file;
  std::string initial = "0";
  std::string target = "1";
  double eps = kTargetEps;
  std::uint64_t seed = 1;
  std::int64_t trials = 100000;
  int max_steps = 10000;
  int max_states = kDefaultMaxStates;
  std::optional<int> horizon;
  std::string output;
  std::string format;  // table | json | csv
};

Vector parse_state_vector(const std::string& spec, Eigen::Index dim) {
  if (spec == "+" || spec == "-") {
    if (dim < 2) throw std::invalid_argument("state spec needs dim >= 2");
    Vector v = Vector::Zero(dim);
    v(0) = 1.0 / std::sqrt(2.0);
    v(1) = (spec == "+" ? 1.0 : -1.0) / std::sqrt(2.0);
    return v;
  }
  if (!spec.empty() && spec.front() == '[') {
    const json j = json::parse(spec);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const json& e = j.at(i);
      if (e.is_array()) {
        v(i) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
      } else {
        v(i) = e.get<double>();
      }
    }
    if (v.size() != dim) {
      throw std::invalid_argument("state spec has wrong dimension");
    }
    return v;
  }
  std::size_t pos = 0;
  const int index = std::stoi(spec, &pos);
  if (pos != spec.size() || index < 0 || index >= dim) {
    throw std::invalid_argument("unrecognized state spec: " + spec);
  }
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return v;
}

MeasurementSet resolve_set(const Options& opt, int T_fallback) {
  if (!opt.set_file.empty()) {
    if (!std::filesystem::exists(opt.set_file)) {
      throw std::invalid_argument("set file not found: " + opt.set_file);
    }
    return load_measurement_set(opt.set_file);
  }
  const int T = opt.T > 0 ? opt.T : T_fallback;
  if (T <= 0) {
    throw std::invalid_argument("need -T or --set-file");
  }
  return build_standard_set(T);
}

// T and N default to each other for the finite-horizon objectives.
std::pair<int, int> resolve_T_N(const Options& opt) {
  int T = opt.T;
  int N = opt.N;
  if (N < 0 && T > 0) N = T;
  if (T <= 0 && N >= 0) T = N;
  return {T, N};
}

void emit(const Options& opt, const std::string& payload) {
  std::fputs(payload.c_str(), stdout);
  if (!opt.output.empty()) {
    write_text_file(opt.output, payload);
  }
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  row += '\n';
  return row;
}

int worker_count(int points) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int cap = static_cast<int>(hw);
  if (const char* env = std::getenv("QSTEER_THREADS")) {
    try {
      cap = std::min(cap, std::max(1, std::stoi(env)));
    } catch (const std::exception&) {
      throw std::invalid_argument("QSTEER_THREADS must be an integer");
    }
  }
  return std::min(cap, std::max(1, points));
}

// Runs fn(i) for i in [0, points); results are indexed, so output order does
// not depend on scheduling.
template <typename Fn>
void parallel_for(int points, Fn&& fn) {
  const int workers = worker_count(points);
  if (workers <= 1) {
    for (int i = 0; i < points; ++i) fn(i);
    return;
  }
  std::atomic<int> counter{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = counter.fetch_add(1); i < points;
             i = counter.fetch_add(1)) {
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int cmd_solve(const Options& opt) {
  const bool finite = opt.objective != "arrival";
  auto [T, N] = resolve_T_N(opt);
  if (!finite && opt.N >= 0) {
    throw std::invalid_argument("-N is not meaningful for the arrival objective");
  }
  if (finite && N < 0 && !opt.set_file.empty()) {
    throw std::invalid_argument("finite-horizon objectives need -N");
  }
  const MeasurementSet set = resolve_set(opt, T);
  if (finite && N < 0) {
    throw std::invalid_argument("finite-horizon objectives need -T or -N");
  }
  const DensityMatrix rho0 =
      make_pure_state(parse_state_vector(opt.initial, set.dim()));
  const DensityMatrix target =
      make_pure_state(parse_state_vector(opt.target, set.dim()));

  const StateGraph graph = enumerate_reachable(
      rho0, set, opt.max_states,
      finite ? std::optional<int>(N) : std::nullopt);

  Policy policy;
  double value = 0.0;
  if (opt.objective == "success") {
    policy = solve_max_success(graph, set, N, target, opt.eps);
    value = policy.values->stage[N][graph.initial_id()];
  } else if (opt.objective == "fidelity") {
    policy = solve_max_fidelity(graph, set, N, target);
    value = policy.values->stage[N][graph.initial_id()];
  } else {
    policy = solve_min_arrival(graph, set, target, kDefaultMaxIters,
                               kDefaultValueIterTol, opt.eps);
    value = policy.values->stationary[graph.initial_id()];
    std::fprintf(stderr, "value iteration: %zu sweeps\n",
                 policy.convergence_residuals.size());
  }

  json result;
  result["command"] = "solve";
  result["objective"] = opt.objective;
  result["T"] = set.size();
  result["N"] = finite ? json(N) : json();
  result["value"] = value;
  result["policy"] = policy_to_json(policy);

  const std::string table = policy_table(policy, graph, set);
  if (!opt.output.empty()) {
    save_policy(policy, opt.output);
    write_text_file(opt.output + ".txt", table);
  }
  const std::string fmt = opt.format.empty() ? "table" : opt.format;
  if (fmt == "json") {
    std::fputs((result.dump(2) + "\n").c_str(), stdout);
  } else if (fmt == "csv") {
    std::fputs("objective,T,N,value\n", stdout);
    std::fputs(csv_row({opt.objective, std::to_string(set.size()),
                        finite ? std::to_string(N) : "",
                        format_double(value)})
                   .c_str(),
               stdout);
  } else {
    std::fputs(table.c_str(), stdout);
    std::fprintf(stdout, "value = %.6g\n", value);
  }
  return 0;
}

struct ResolvedPolicy {
  Policy policy;
  std::string name;
  std::optional<double> exact_arrival;  // stationary solve value
};

ResolvedPolicy resolve_policy(const Options& opt, const MeasurementSet& set,
                              const StateGraph& graph,
                              const DensityMatrix& target, int N) {
  ResolvedPolicy r;
  r.name = opt.policy;
  if (opt.policy == "naive") {
    r.policy = make_naive_policy(set, N);
  } else if (opt.policy == "s1") {
    r.policy = make_s1_policy(set);
  } else if (opt.policy == "optimal") {
    if (opt.objective == "success") {
      r.policy = solve_max_success(graph, set, N, target, opt.eps);
    } else if (opt.objective == "fidelity") {
      r.policy = solve_max_fidelity(graph, set, N, target);
    } else {
      r.policy = solve_min_arrival(graph, set, target, kDefaultMaxIters,
                                   kDefaultValueIterTol, opt.eps);
      r.exact_arrival = r.policy.values->stationary[graph.initial_id()];
    }
  } else {
    if (!std::filesystem::exists(opt.policy)) {
      throw std::invalid_argument("policy file not found: " + opt.policy);
    }
    r.policy = load_policy(opt.policy);
    if (r.policy.kind == Policy::Kind::stationary && r.policy.values &&
        !r.policy.values->stationary.empty()) {
      r.exact_arrival = r.policy.values->stationary[graph.initial_id()];
    }
  }
  return r;
}

int cmd_evaluate(const Options& opt) {
  if (opt.objective == "arrival") {
    throw std::invalid_argument(
        "exact evaluation covers finite-horizon objectives only");
  }
  auto [T, N] = resolve_T_N(opt);
  if (opt.policy == "s1") {
    if (T <= 0) T = 3;
    if (N < 0) N = 3;
    if (T != 3 || N != 3) {
      throw std::invalid_argument("the s1 policy is defined for T = N = 3");
    }
  }
  const MeasurementSet set = resolve_set(opt, T);
  if (N < 0) throw std::invalid_argument("evaluate needs -N or -T");
  const DensityMatrix rho0 =
      make_pure_state(parse_state_vector(opt.initial, set.dim()));
  const DensityMatrix target =
      make_pure_state(parse_state_vector(opt.target, set.dim()));
  const StateGraph graph =
      enumerate_reachable(rho0, set, opt.max_states, N);

  const ResolvedPolicy rp = resolve_policy(opt, set, graph, target, N);
  const EvaluationResult ev = evaluate_policy_exact(
      rp.policy, graph, graph.initial_id(), target, opt.eps);
  const double exact = opt.objective == "success" ? ev.success_prob
                                                  : ev.fidelity_expectation;

  const std::string fmt = opt.format.empty() ? "table" : opt.format;
  if (fmt == "json") {
    json result;
    result["command"] = "evaluate";
    result["policy"] = rp.name;
    result["objective"] = opt.objective;
    result["T"] = set.size();
    result["N"] = N;
    result["exact_value"] = exact;
    result["success_prob"] = ev.success_prob;
    result["expected_fidelity"] = ev.fidelity_expectation;
    result["mc_estimate"] = json();
    result["mc_stderr"] = json();
    result["trials"] = json();
    result["seed"] = json();
    emit(opt, result.dump(2) + "\n");
  } else if (fmt == "csv") {
    std::string payload = "policy,T,N,exact_value,mc_estimate,mc_stderr,trials,seed\n";
    payload += csv_row({rp.name, std::to_string(set.size()), std::to_string(N),
                        format_double(exact), "", "", "", ""});
    emit(opt, payload);
  } else {
    std::string payload = policy_table(rp.policy, graph, set, &ev.by_step);
    payload += "policy            = " + rp.name + "\n";
    payload += "success_prob      = " + format_double(ev.success_prob) + "\n";
    payload += "expected_fidelity = " + format_double(ev.fidelity_expectation) + "\n";
    emit(opt, payload);
  }
  return 0;
}

int cmd_simulate(const Options& opt) {
  if (opt.objective == "fidelity") {
    throw std::invalid_argument(
        "simulate supports the success and arrival objectives");
  }
  const bool arrival = opt.objective == "arrival";
  auto [T, N] = resolve_T_N(opt);
  if (opt.policy == "s1") {
    if (T <= 0) T = 3;
    if (N < 0) N = 3;
  }
  const MeasurementSet set = resolve_set(opt, T);
  if (!arrival && N < 0) {
    throw std::invalid_argument("simulate needs -N or -T for success");
  }
  const DensityMatrix rho0 =
      make_pure_state(parse_state_vector(opt.initial, set.dim()));
  const DensityMatrix target =
      make_pure_state(parse_state_vector(opt.target, set.dim()));
  const StateGraph graph = enumerate_reachable(
      rho0, set, opt.max_states,
      arrival ? std::nullopt : std::optional<int>(N));

  const ResolvedPolicy rp = resolve_policy(opt, set, graph, target, N);
  if (arrival && rp.policy.kind != Policy::Kind::stationary) {
    throw std::invalid_argument(
        "the arrival objective needs a stationary policy");
  }
  if (!arrival && rp.policy.kind == Policy::Kind::stationary) {
    throw std::invalid_argument(
        "the success objective needs a finite-horizon policy");
  }

  std::optional<double> exact;
  if (arrival) {
    exact = rp.exact_arrival;
  } else {
    const EvaluationResult ev = evaluate_policy_exact(
        rp.policy, graph, graph.initial_id(), target, opt.eps);
    exact = ev.success_prob;
  }

  const SimulationResult sim = simulate(rp.policy, set, rho0, target,
                                        opt.trials, opt.seed, opt.max_steps);
  double estimate = 0.0;
  double stderr_est = 0.0;
  if (arrival) {
    estimate = sim.mean_arrival;
    double ss = 0.0;
    for (const TrajectoryRecord& rec : sim.records) {
      if (!rec.arrived) continue;
      const double d = static_cast<double>(*rec.arrival_step) - sim.mean_arrival;
      ss += d * d;
    }
    if (sim.arrived_trials > 1) {
      stderr_est = std::sqrt(ss / static_cast<double>(sim.arrived_trials - 1) /
                             static_cast<double>(sim.arrived_trials));
    }
  } else {
    estimate = sim.success_rate;
    stderr_est = std::sqrt(sim.success_rate * (1.0 - sim.success_rate) /
                           static_cast<double>(sim.trials));
  }

  const std::string fmt = opt.format.empty() ? "table" : opt.format;
  if (fmt == "json") {
    json result;
    result["command"] = "simulate";
    result["policy"] = rp.name;
    result["objective"] = opt.objective;
    result["T"] = set.size();
    result["N"] = arrival ? json() : json(N);
    result["exact_value"] = exact ? json(*exact) : json();
    result["mc_estimate"] = estimate;
    result["mc_stderr"] = stderr_est;
    result["trials"] = sim.trials;
    result["seed"] = opt.seed;
    result["arrived_trials"] = sim.arrived_trials;
    result["non_arrived_trials"] = sim.trials - sim.arrived_trials;
    emit(opt, result.dump(2) + "\n");
  } else if (fmt == "csv") {
    std::string payload = "policy,T,N,exact_value,mc_estimate,mc_stderr,trials,seed\n";
    payload += csv_row({rp.name, std::to_string(set.size()),
                        arrival ? "" : std::to_string(N),
                        exact ? format_double(*exact) : "",
                        format_double(estimate), format_double(stderr_est),
                        std::to_string(sim.trials), std::to_string(opt.seed)});
    emit(opt, payload);
  } else {
    std::string payload;
    payload += "policy      = " + rp.name + "\n";
    if (exact) payload += "exact_value = " + format_double(*exact) + "\n";
    payload += "mc_estimate = " + format_double(estimate) + "\n";
    payload += "mc_stderr   = " + format_double(stderr_est) + "\n";
    payload += "arrived     = " + std::to_string(sim.arrived_trials) + "/" +
               std::to_string(sim.trials) + "\n";
    emit(opt, payload);
  }
  return 0;
}

int cmd_graph(const Options& opt) {
  const MeasurementSet set = resolve_set(opt, opt.T);
  const DensityMatrix rho0 =
      make_pure_state(parse_state_vector(opt.initial, set.dim()));
  const DensityMatrix target =
      make_pure_state(parse_state_vector(opt.target, set.dim()));
  StateGraph graph =
      enumerate_reachable(rho0, set, opt.max_states, opt.horizon);
  graph.set_target_id(find_target_state(graph, target, opt.eps));
  emit(opt, graph_to_json(graph, set).dump(2) + "\n");
  return 0;
}

int cmd_sweep(const Options& opt) {
  const Vector zero = (Vector(2) << 1.0, 0.0).finished();
  const Vector one = (Vector(2) << 0.0, 1.0).finished();
  const DensityMatrix rho0 = make_pure_state(zero);
  const DensityMatrix target = make_pure_state(one);

  std::string header;
  std::vector<std::vector<double>> rows;

  if (opt.sweep_name == "fig1") {
    // Naive vs. optimal success probability for T = N = 3..10.
    header = "N,naive,optimal";
    rows.assign(8, {});
    parallel_for(8, [&](int i) {
      const int N = 3 + i;
      const MeasurementSet set = build_standard_set(N);
      const StateGraph graph = enumerate_reachable(rho0, set);
      const Policy naive = make_naive_policy(set, N);
      const double p_naive =
          evaluate_policy_exact(naive, graph, graph.initial_id(), target)
              .success_prob;
      const Policy optimal = solve_max_success(graph, set, N, target);
      rows[i] = {static_cast<double>(N), p_naive,
                 optimal.values->stage[N][graph.initial_id()]};
    });
  } else if (opt.sweep_name == "fig2") {
    // Optimal success probability vs. N for measurement sets of size
    // T = 10, 100, 1000. One backward pass per T yields every N <= 10.
    header = "N,J_T10,J_T100,J_T1000";
    const int kMaxN = 10;
    const std::vector<int> sizes = {10, 100, 1000};
    std::vector<std::vector<double>> columns(sizes.size());
    parallel_for(static_cast<int>(sizes.size()), [&](int i) {
      const MeasurementSet set = build_standard_set(sizes[i]);
      const StateGraph graph = enumerate_reachable(rho0, set);
      const Policy p = solve_max_success(graph, set, kMaxN, target);
      std::vector<double> col;
      for (int n = 3; n <= kMaxN; ++n) {
        col.push_back(p.values->stage[n][graph.initial_id()]);
      }
      columns[i] = std::move(col);
    });
    for (int n = 3; n <= kMaxN; ++n) {
      rows.push_back({static_cast<double>(n), columns[0][n - 3],
                      columns[1][n - 3], columns[2][n - 3]});
    }
  } else if (opt.sweep_name == "fig3") {
    // Minimal expected arrival time vs. measurement-set size T = 2..30.
    header = "T,expected_arrival";
    rows.assign(29, {});
    parallel_for(29, [&](int i) {
      const int T = 2 + i;
      const MeasurementSet set = build_standard_set(T);
      const StateGraph graph = enumerate_reachable(rho0, set);
      const Policy p = solve_min_arrival(graph, set, target);
      rows[i] = {static_cast<double>(T),
                 p.values->stationary[graph.initial_id()]};
    });
  } else {
    throw std::invalid_argument("unknown sweep: " + opt.sweep_name);
  }

  const std::string fmt = opt.format.empty() ? "csv" : opt.format;
  if (fmt == "json") {
    json result;
    result["command"] = "sweep";
    result["sweep"] = opt.sweep_name;
    result["header"] = header;
    result["rows"] = rows;
    emit(opt, result.dump(2) + "\n");
  } else {
    std::string payload = header + "\n";
    for (const std::vector<double>& row : rows) {
      std::vector<std::string> cells;
      cells.push_back(format_double(row[0], 6));
      for (std::size_t c = 1; c < row.size(); ++c) {
        cells.push_back(format_double(row[c]));
      }
      payload += csv_row(cells);
    }
    emit(opt, payload);
  }
  return 0;
}

void add_common(CLI::App* cmd, Options& opt, bool with_target = true) {
  cmd->add_option("-T,--set-size", opt.T, "Standard measurement-set size");
  cmd->add_option("--set-file", opt.set_file, "Measurement-set JSON file");
  cmd->add_option("--initial", opt.initial,
                  "Initial state (basis index, +, -, or JSON amplitudes)");
  if (with_target) {
    cmd->add_option("--target", opt.target, "Target state spec");
    cmd->add_option("--eps", opt.eps, "Target-match tolerance");
  }
  cmd->add_option("--max-states", opt.max_states,
                  "Reachable-state budget before failing");
  cmd->add_option("--output", opt.output, "Write the result to this path");
  cmd->add_option("--format", opt.format, "table, json, or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal measurement-selection feedback policies for steering "
               "a quantum state to a target by sequential measurements"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* solve = app.add_subcommand(
      "solve", "Solve one objective and write the optimal policy");
  solve->add_option("--objective", opt.objective, "success, fidelity, or arrival")
      ->required()
      ->check(CLI::IsMember({"success", "fidelity", "arrival"}));
  solve->add_option("-N,--horizon", opt.N, "Number of measurement steps");
  add_common(solve, opt);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Exact value of a policy by distribution propagation");
  evaluate->add_option("--policy", opt.policy,
                       "naive, s1, optimal, or a policy JSON file");
  evaluate->add_option("--objective", opt.objective, "success or fidelity")
      ->check(CLI::IsMember({"success", "fidelity", "arrival"}));
  evaluate->add_option("-N,--horizon", opt.N, "Number of measurement steps");
  add_common(evaluate, opt);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Seeded Monte Carlo rollout of a policy");
  simulate->add_option("--policy", opt.policy,
                       "naive, s1, optimal, or a policy JSON file");
  simulate->add_option("--objective", opt.objective, "success or arrival")
      ->check(CLI::IsMember({"success", "fidelity", "arrival"}));
  simulate->add_option("-N,--horizon", opt.N, "Number of measurement steps");
  simulate->add_option("--trials", opt.trials, "Number of trials");
  simulate->add_option("--seed", opt.seed, "Base RNG seed");
  simulate->add_option("--max-steps", opt.max_steps,
                       "Step bound per trajectory (stationary policies)");
  add_common(simulate, opt);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Parameter sweeps: fig1 (naive vs optimal success), "
               "fig2 (set-size influence), fig3 (arrival time vs T)");
  sweep->add_option("name", opt.sweep_name, "fig1, fig2, or fig3")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  sweep->add_option("--output", opt.output, "Write the result to this path");
  sweep->add_option("--format", opt.format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* graph = app.add_subcommand(
      "graph", "Enumerate the reachable state graph and export it as JSON");
  graph->add_option(
      "--horizon",
      [&opt](const std::vector<std::string>& v) {
        opt.horizon = std::stoi(v.at(0));
        return true;
      },
      "Stop expansion after this many layers");
  add_common(graph, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (app.got_subcommand(solve)) return cmd_solve(opt);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(opt);
    if (app.got_subcommand(simulate)) return cmd_simulate(opt);
    if (app.got_subcommand(sweep)) return cmd_sweep(opt);
    if (app.got_subcommand(graph)) return cmd_graph(opt);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
