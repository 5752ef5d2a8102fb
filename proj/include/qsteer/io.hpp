#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qsteer/evaluation.hpp"
#include "qsteer/measurement.hpp"
#include "qsteer/solvers.hpp"
#include "qsteer/state_graph.hpp"

namespace qsteer {

// Complex numbers are [re, im] pairs; matrices are row-major lists of rows.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// Measurement-set file format:
// { "dim": d,
//   "actions": [ { "name": str,
//                  "outcomes": [ { "label": str, "kraus": [[[re,im],...],...] } ] } ],
//   "target_action": index|null }           (index is 0-based)
nlohmann::json measurement_set_to_json(const MeasurementSet& set);
MeasurementSet measurement_set_from_json(const nlohmann::json& j);

MeasurementSet load_measurement_set(const std::string& path);
void save_measurement_set(const MeasurementSet& set, const std::string& path);

nlohmann::json graph_to_json(const StateGraph& graph,
                             const MeasurementSet& set);

// Policy file format:
// { "kind": "markov"|"stationary"|"deterministic_sequence",
//   "horizon": N|null,
//   "choices": [ { "step": k, "state_id": s, "action": a } ],
//   "values": [[...]] (finite horizon, by stages remaining) or [...] }
// Undefined (step, state) pairs are omitted from "choices"; unreachable
// stationary values serialize as null.
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

/// Number of states the policy's choice maps cover (0 for sequences).
int policy_num_states(const Policy& policy);

Policy load_policy(const std::string& path);
void save_policy(const Policy& policy, const std::string& path);

/// Display names for graph states: basis projectors print as |0>, |1>, ...;
/// states matching a rank-1 outcome projector of the set print as
/// |label> with the outcome's label; anything else falls back to s<id>.
std::vector<std::string> state_labels(const StateGraph& graph,
                                      const MeasurementSet& set);

/// Plain-text action table, rows = states and columns = steps. A "*" marks
/// pairs the policy leaves undefined; when `reachable_by_step` is given
/// (from exact evaluation) it also masks states that cannot occur at a step.
std::string policy_table(const Policy& policy, const StateGraph& graph,
                         const MeasurementSet& set,
                         const std::vector<StateDistribution>*
                             reachable_by_step = nullptr);

std::string format_double(double v, int significant = 12);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace qsteer
