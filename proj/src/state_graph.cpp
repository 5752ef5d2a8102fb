#include "qsteer/state_graph.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace qsteer {

std::size_t CanonicalKeyHash::operator()(const CanonicalKey& k) const {
  // FNV-1a over the quantized words.
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::int64_t v : k.quantized) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

CanonicalKey canonical_key(const DensityMatrix& rho, double resolution) {
  CanonicalKey key;
  const Matrix& m = rho.matrix();
  key.quantized.reserve(2 * static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      key.quantized.push_back(std::llround(m(r, c).real() / resolution));
      key.quantized.push_back(std::llround(m(r, c).imag() / resolution));
    }
  }
  return key;
}

namespace {

// Dedup index: quantized keys bucket the states; a candidate matches a stored
// representative only if it is within match_tol entrywise. Coordinates that
// sit within match_tol of a quantization boundary are probed with both
// roundings so near-identical states cannot be split by the rounding.
class StateIndex {
 public:
  StateIndex(const std::vector<DensityMatrix>& states, double resolution,
             double match_tol)
      : states_(states), resolution_(resolution), match_tol_(match_tol) {}

  std::optional<StateId> find(const Matrix& m) const {
    std::vector<std::int64_t> base;
    std::vector<std::size_t> ambiguous;  // positions with an alternate rounding
    std::vector<std::int64_t> alternate;
    base.reserve(2 * static_cast<std::size_t>(m.size()));
    const double band = match_tol_ / resolution_ + 1e-6;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (const double v : {m(r, c).real(), m(r, c).imag()}) {
          const double scaled = v / resolution_;
          const std::int64_t q = std::llround(scaled);
          const double frac = scaled - static_cast<double>(q);
          if (std::abs(frac) >= 0.5 - band) {
            ambiguous.push_back(base.size());
            alternate.push_back(q + (frac >= 0.0 ? 1 : -1));
          }
          base.push_back(q);
        }
      }
    }
    if (ambiguous.size() > 16) {
      // Degenerate quantization; fall back to a scan.
      for (StateId s = 0; s < static_cast<StateId>(states_.size()); ++s) {
        if (max_abs_diff(states_[s].matrix(), m) <= match_tol_) return s;
      }
      return std::nullopt;
    }
    CanonicalKey probe{base};
    for (std::uint32_t mask = 0; mask < (1u << ambiguous.size()); ++mask) {
      for (std::size_t b = 0; b < ambiguous.size(); ++b) {
        probe.quantized[ambiguous[b]] =
            (mask >> b) & 1u ? alternate[b] : base[ambiguous[b]];
      }
      const auto it = buckets_.find(probe);
      if (it == buckets_.end()) continue;
      for (const StateId s : it->second) {
        if (max_abs_diff(states_[s].matrix(), m) <= match_tol_) return s;
      }
    }
    return std::nullopt;
  }

  void insert(const DensityMatrix& rho, StateId id) {
    buckets_[canonical_key(rho, resolution_)].push_back(id);
  }

 private:
  const std::vector<DensityMatrix>& states_;
  double resolution_;
  double match_tol_;
  std::unordered_map<CanonicalKey, std::vector<StateId>, CanonicalKeyHash>
      buckets_;
};

}  // namespace

StateGraph enumerate_reachable(const DensityMatrix& rho0,
                               const MeasurementSet& set, int max_states,
                               std::optional<int> horizon) {
  if (rho0.dim() != set.dim()) {
    throw std::invalid_argument("enumerate_reachable: dimension mismatch");
  }
  if (max_states < 1) {
    throw std::invalid_argument("enumerate_reachable: max_states must be >= 1");
  }
  if (horizon && *horizon < 0) {
    throw std::invalid_argument("enumerate_reachable: negative horizon");
  }

  StateGraph g;
  g.num_actions_ = set.size();
  StateIndex index(g.states_, kKeyResolution, kComparisonTol);

  g.states_.push_back(rho0);
  g.depths_.push_back(0);
  index.insert(rho0, 0);
  g.offsets_.push_back(0);

  bool truncated = false;
  // Discovery order equals id order, so iterating by id is the BFS queue.
  for (StateId s = 0; s < static_cast<StateId>(g.states_.size()); ++s) {
    if (horizon && g.depths_[s] >= *horizon) {
      truncated = true;
      for (int a = 0; a < g.num_actions_; ++a) {
        g.offsets_.push_back(g.transitions_.size());
      }
      continue;
    }
    for (int a = 0; a < g.num_actions_; ++a) {
      for (const OutcomeResult& out :
           apply_measurement(g.states_[s], set.action(a))) {
        std::optional<StateId> next = index.find(out.post_state.matrix());
        if (!next) {
          if (static_cast<int>(g.states_.size()) >= max_states) {
            throw std::runtime_error("state explosion");
          }
          next = static_cast<StateId>(g.states_.size());
          g.states_.push_back(out.post_state);
          g.depths_.push_back(g.depths_[s] + 1);
          index.insert(out.post_state, *next);
        }
        g.transitions_.push_back(
            {out.outcome_index, *next, out.probability});
      }
      g.offsets_.push_back(g.transitions_.size());
    }
  }
  if (truncated) {
    g.truncated_at_ = horizon;
  }
  return g;
}

std::optional<StateId> find_target_state(const StateGraph& graph,
                                         const DensityMatrix& target,
                                         double eps) {
  for (StateId s = 0; s < graph.num_states(); ++s) {
    if (is_target(graph.state(s), target, eps)) return s;
  }
  return std::nullopt;
}

}  // namespace qsteer
