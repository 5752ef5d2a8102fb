#include "qsteer/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qsteer {

using nlohmann::json;

nlohmann::json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("matrix JSON must be a non-empty array");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("matrix JSON rows have unequal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& entry = row.at(c);
      if (!entry.is_array() || entry.size() != 2) {
        throw std::invalid_argument(
            "matrix entries must be [re, im] pairs");
      }
      m(r, c) = Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
  }
  return m;
}

nlohmann::json measurement_set_to_json(const MeasurementSet& set) {
  json actions = json::array();
  for (const Measurement& e : set.actions()) {
    json outcomes = json::array();
    for (const MeasurementOutcome& o : e.outcomes()) {
      outcomes.push_back({{"label", o.label}, {"kraus", matrix_to_json(o.kraus)}});
    }
    actions.push_back({{"name", e.name()}, {"outcomes", std::move(outcomes)}});
  }
  json j;
  j["dim"] = set.dim();
  j["actions"] = std::move(actions);
  j["target_action"] =
      set.target_action_index() ? json(*set.target_action_index()) : json();
  return j;
}

MeasurementSet measurement_set_from_json(const nlohmann::json& j) {
  const Eigen::Index dim = j.at("dim").get<Eigen::Index>();
  std::vector<Measurement> actions;
  for (const json& ja : j.at("actions")) {
    std::vector<MeasurementOutcome> outcomes;
    for (const json& jo : ja.at("outcomes")) {
      Matrix kraus = matrix_from_json(jo.at("kraus"));
      if (kraus.rows() != dim) {
        throw std::invalid_argument(
            "Kraus dimension disagrees with declared dim");
      }
      outcomes.push_back({jo.at("label").get<std::string>(), std::move(kraus)});
    }
    actions.emplace_back(ja.at("name").get<std::string>(), std::move(outcomes));
  }
  std::optional<int> target;
  if (j.contains("target_action") && !j.at("target_action").is_null()) {
    target = j.at("target_action").get<int>();
  }
  return MeasurementSet(std::move(actions), target);
}

MeasurementSet load_measurement_set(const std::string& path) {
  return measurement_set_from_json(json::parse(read_text_file(path)));
}

void save_measurement_set(const MeasurementSet& set, const std::string& path) {
  write_text_file(path, measurement_set_to_json(set).dump(2) + "\n");
}

nlohmann::json graph_to_json(const StateGraph& graph,
                             const MeasurementSet& set) {
  json states = json::array();
  for (const DensityMatrix& s : graph.states()) {
    states.push_back(matrix_to_json(s.matrix()));
  }
  json edges = json::array();
  for (StateId s = 0; s < graph.num_states(); ++s) {
    if (!graph.expanded(s)) continue;
    for (int a = 0; a < graph.num_actions(); ++a) {
      json outcomes = json::array();
      for (const Transition& t : graph.transitions(s, a)) {
        outcomes.push_back(
            {{"outcome", t.outcome},
             {"label", set.action(a).outcomes()[t.outcome].label},
             {"prob", t.probability},
             {"next", t.next}});
      }
      edges.push_back(
          {{"state", s}, {"action", a}, {"outcomes", std::move(outcomes)}});
    }
  }
  json depth = json::array();
  for (StateId s = 0; s < graph.num_states(); ++s) depth.push_back(graph.depth(s));
  json j;
  j["dim"] = graph.dim();
  j["num_actions"] = graph.num_actions();
  j["initial_id"] = graph.initial_id();
  j["target_id"] = graph.target_id() ? json(*graph.target_id()) : json();
  j["truncated_at"] =
      graph.truncated_at() ? json(*graph.truncated_at()) : json();
  j["states"] = std::move(states);
  j["depth"] = std::move(depth);
  j["edges"] = std::move(edges);
  return j;
}

namespace {

const char* policy_kind_name(Policy::Kind kind) {
  switch (kind) {
    case Policy::Kind::markov: return "markov";
    case Policy::Kind::stationary: return "stationary";
    case Policy::Kind::deterministic_sequence: return "deterministic_sequence";
  }
  return "markov";
}

Policy::Kind policy_kind_from_name(const std::string& name) {
  if (name == "markov") return Policy::Kind::markov;
  if (name == "stationary") return Policy::Kind::stationary;
  if (name == "deterministic_sequence")
    return Policy::Kind::deterministic_sequence;
  throw std::invalid_argument("unknown policy kind: " + name);
}

}  // namespace

int policy_num_states(const Policy& policy) {
  switch (policy.kind) {
    case Policy::Kind::markov:
      return policy.markov.empty() ? 0
                                   : static_cast<int>(policy.markov[0].size());
    case Policy::Kind::stationary:
      return static_cast<int>(policy.stationary_choice.size());
    case Policy::Kind::deterministic_sequence:
      return 0;
  }
  return 0;
}

nlohmann::json policy_to_json(const Policy& policy) {
  json choices = json::array();
  switch (policy.kind) {
    case Policy::Kind::markov:
      for (int k = 0; k < static_cast<int>(policy.markov.size()); ++k) {
        for (StateId s = 0; s < static_cast<StateId>(policy.markov[k].size());
             ++s) {
          if (policy.markov[k][s] < 0) continue;
          choices.push_back(
              {{"step", k}, {"state_id", s}, {"action", policy.markov[k][s]}});
        }
      }
      break;
    case Policy::Kind::stationary:
      for (StateId s = 0;
           s < static_cast<StateId>(policy.stationary_choice.size()); ++s) {
        if (policy.stationary_choice[s] < 0) continue;
        choices.push_back(
            {{"state_id", s}, {"action", policy.stationary_choice[s]}});
      }
      break;
    case Policy::Kind::deterministic_sequence:
      for (int k = 0; k < static_cast<int>(policy.sequence.size()); ++k) {
        choices.push_back({{"step", k}, {"action", policy.sequence[k]}});
      }
      break;
  }

  json values;
  if (policy.values) {
    if (policy.values->kind == ValueTable::Kind::finite_horizon) {
      values = json::array();
      for (const auto& stage : policy.values->stage) {
        values.push_back(stage);
      }
    } else {
      values = json::array();
      for (const double v : policy.values->stationary) {
        values.push_back(std::isfinite(v) ? json(v) : json());
      }
    }
  }

  json j;
  j["kind"] = policy_kind_name(policy.kind);
  j["horizon"] =
      policy.kind == Policy::Kind::stationary ? json() : json(policy.horizon);
  j["num_states"] = policy_num_states(policy);
  j["choices"] = std::move(choices);
  j["values"] = std::move(values);
  return j;
}

Policy policy_from_json(const nlohmann::json& j) {
  Policy policy;
  policy.kind = policy_kind_from_name(j.at("kind").get<std::string>());
  if (!j.at("horizon").is_null()) {
    policy.horizon = j.at("horizon").get<int>();
  }
  int num_states = j.value("num_states", 0);
  for (const json& c : j.at("choices")) {
    if (c.contains("state_id")) {
      num_states = std::max(num_states, c.at("state_id").get<int>() + 1);
    }
  }

  switch (policy.kind) {
    case Policy::Kind::markov:
      policy.markov.assign(policy.horizon,
                           std::vector<std::int32_t>(num_states, -1));
      for (const json& c : j.at("choices")) {
        policy.markov.at(c.at("step").get<int>())
            .at(c.at("state_id").get<int>()) = c.at("action").get<int>();
      }
      break;
    case Policy::Kind::stationary:
      policy.stationary_choice.assign(num_states, -1);
      for (const json& c : j.at("choices")) {
        policy.stationary_choice.at(c.at("state_id").get<int>()) =
            c.at("action").get<int>();
      }
      break;
    case Policy::Kind::deterministic_sequence:
      policy.sequence.assign(policy.horizon, -1);
      for (const json& c : j.at("choices")) {
        policy.sequence.at(c.at("step").get<int>()) = c.at("action").get<int>();
      }
      break;
  }

  if (j.contains("values") && !j.at("values").is_null()) {
    ValueTable table;
    if (policy.kind == Policy::Kind::stationary) {
      table.kind = ValueTable::Kind::stationary;
      for (const json& v : j.at("values")) {
        table.stationary.push_back(
            v.is_null() ? std::numeric_limits<double>::infinity()
                        : v.get<double>());
      }
    } else {
      table.kind = ValueTable::Kind::finite_horizon;
      table.horizon = policy.horizon;
      for (const json& stage : j.at("values")) {
        table.stage.push_back(stage.get<std::vector<double>>());
      }
    }
    policy.values = std::move(table);
  }
  return policy;
}

Policy load_policy(const std::string& path) {
  return policy_from_json(json::parse(read_text_file(path)));
}

void save_policy(const Policy& policy, const std::string& path) {
  write_text_file(path, policy_to_json(policy).dump(2) + "\n");
}

std::vector<std::string> state_labels(const StateGraph& graph,
                                      const MeasurementSet& set) {
  const Eigen::Index d = graph.dim();
  std::vector<std::string> labels(graph.num_states());
  constexpr double tol = 1e-6;
  for (StateId s = 0; s < graph.num_states(); ++s) {
    const Matrix& m = graph.state(s).matrix();
    std::string label;
    for (Eigen::Index b = 0; b < d && label.empty(); ++b) {
      Matrix basis = Matrix::Zero(d, d);
      basis(b, b) = 1.0;
      if (max_abs_diff(m, basis) <= tol) {
        label = "|" + std::to_string(b) + ">";
      }
    }
    for (int a = 0; a < set.size() && label.empty(); ++a) {
      for (const MeasurementOutcome& o : set.action(a).outcomes()) {
        const Matrix& p = o.kraus;
        if (std::abs(p.trace().real() - 1.0) > tol) continue;
        if (max_abs_diff(p * p, p) > tol) continue;
        if (max_abs_diff(m, p) <= tol) {
          label = "|" + o.label + ">";
          break;
        }
      }
    }
    labels[s] = label.empty() ? "s" + std::to_string(s) : label;
  }
  return labels;
}

std::string policy_table(const Policy& policy, const StateGraph& graph,
                         const MeasurementSet& set,
                         const std::vector<StateDistribution>*
                             reachable_by_step) {
  const std::vector<std::string> labels = state_labels(graph, set);
  const int steps =
      policy.kind == Policy::Kind::stationary ? 1 : policy.horizon;

  std::size_t name_width = 5;
  for (const std::string& l : labels) name_width = std::max(name_width, l.size());
  std::size_t cell_width = 4;
  for (const Measurement& e : set.actions()) {
    cell_width = std::max(cell_width, e.name().size());
  }

  std::ostringstream out;
  auto pad = [&](const std::string& text, std::size_t width) {
    out << text;
    for (std::size_t i = text.size(); i < width + 2; ++i) out << ' ';
  };

  pad("state", name_width);
  if (policy.kind == Policy::Kind::stationary) {
    pad("action", cell_width);
  } else {
    for (int k = 0; k < steps; ++k) pad("k=" + std::to_string(k), cell_width);
  }
  out << '\n';

  for (StateId s = 0; s < graph.num_states(); ++s) {
    pad(labels[s], name_width);
    for (int k = 0; k < steps; ++k) {
      const std::int32_t a = policy.action_at(k, s);
      const bool unreachable =
          reachable_by_step &&
          (k >= static_cast<int>(reachable_by_step->size()) ||
           (*reachable_by_step)[k].probs[s] <= 0.0);
      if (a < 0 || unreachable) {
        pad("*", cell_width);
      } else {
        pad(set.action(a).name(), cell_width);
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string format_double(double v, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << contents;
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace qsteer
