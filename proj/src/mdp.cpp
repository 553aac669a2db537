#include "mdpdist/mdp.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>
#include <utility>

#include "mdpdist/errors.hpp"

namespace mdpdist {

StateActionIndex::StateActionIndex(std::vector<std::string> states,
                                   std::vector<std::string> actions)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      num_states_(static_cast<Index>(states_.size())),
      num_actions_(static_cast<Index>(actions_.size())) {
  state_lookup_.reserve(states_.size());
  action_lookup_.reserve(actions_.size());
  for (Index s = 0; s < num_states_; ++s) state_lookup_.emplace(states_[s], s);
  for (Index a = 0; a < num_actions_; ++a) action_lookup_.emplace(actions_[a], a);
}

std::string StateActionIndex::pair_label(Index pair) const {
  const auto [s, a] = split(pair);
  return states_[s] + "," + actions_[a];
}

std::vector<std::string> StateActionIndex::pair_labels() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Index x = 0; x < size(); ++x) out.push_back(pair_label(x));
  return out;
}

std::optional<Index> StateActionIndex::find_state(std::string_view label) const {
  const auto it = state_lookup_.find(std::string(label));
  if (it == state_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> StateActionIndex::find_action(std::string_view label) const {
  const auto it = action_lookup_.find(std::string(label));
  if (it == action_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<Index> StateActionIndex::find_pairs(std::string_view label) const {
  std::vector<Index> hits;
  for (std::size_t pos = label.find(','); pos != std::string_view::npos;
       pos = label.find(',', pos + 1)) {
    const auto s = find_state(label.substr(0, pos));
    const auto a = find_action(label.substr(pos + 1));
    if (s && a) hits.push_back(of(*s, *a));
  }
  return hits;
}

namespace {

// Accept sums within kStochasticTol of one, renormalize up to kRenormalizeTol
// with a warning, reject beyond. Negative entries are always rejected.
template <typename Row>
void fix_distribution(Row&& row, const std::string& location,
                      const std::vector<std::string>& entry_labels,
                      std::vector<std::string>& warnings) {
  for (Index k = 0; k < row.size(); ++k) {
    if (row[k] < 0.0) throw NegativeEntryError(location + "[" + entry_labels[k] + "]");
  }
  const Scalar sum = row.sum();
  const Scalar deficit = sum - 1.0;
  if (std::abs(deficit) <= kStochasticTol) return;
  if (std::abs(deficit) <= kRenormalizeTol) {
    row /= sum;
    std::ostringstream msg;
    msg << location << " renormalized (sum was off by " << deficit << ")";
    warnings.push_back(msg.str());
    return;
  }
  throw NonStochasticRowError(location, deficit);
}

}  // namespace

MdpSpec validate(MdpSpec spec) {
  if (spec.states.empty() || spec.actions.empty()) throw EmptyStateOrActionSetError();
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) throw GammaOutOfRangeError(spec.gamma);

  const Index ns = spec.num_states();
  const Index na = spec.num_actions();
  const Index n = spec.num_pairs();
  if (spec.transition.rows() != n || spec.transition.cols() != ns)
    throw ValidationError("transition table must be |S||A| x |S|");
  if (spec.policy.rows() != ns || spec.policy.cols() != na)
    throw ValidationError("policy table must be |S| x |A|");
  if (spec.initial.size() != ns)
    throw ValidationError("initial distribution must have |S| entries");
  if (spec.reward.size() == 0) spec.reward = Vector::Zero(n);
  if (spec.reward.size() != n) throw ValidationError("reward table must have |S||A| entries");

  const StateActionIndex idx = spec.pair_index();
  for (Index x = 0; x < n; ++x) {
    fix_distribution(spec.transition.row(x), "transition[" + idx.pair_label(x) + "]",
                     spec.states, spec.warnings);
  }
  for (Index s = 0; s < ns; ++s) {
    fix_distribution(spec.policy.row(s), "policy[" + spec.states[s] + "]", spec.actions,
                     spec.warnings);
  }
  fix_distribution(spec.initial, "initial", spec.states, spec.warnings);
  return spec;
}

Matrix induced_transition(const MdpSpec& mdp) {
  const Index ns = mdp.num_states();
  const Index na = mdp.num_actions();
  const Index n = mdp.num_pairs();
  Matrix p = Matrix::Zero(n, n);
  for (Index x = 0; x < n; ++x) {
    for (Index s2 = 0; s2 < ns; ++s2) {
      const Scalar base = mdp.transition(x, s2);
      if (base == 0.0) continue;
      for (Index a2 = 0; a2 < na; ++a2) p(s2 * na + a2, x) = base * mdp.policy(s2, a2);
    }
  }
  return p;
}

Vector initial_pair_distribution(const MdpSpec& mdp) {
  const Index ns = mdp.num_states();
  const Index na = mdp.num_actions();
  Vector rho0(ns * na);
  for (Index s = 0; s < ns; ++s)
    for (Index a = 0; a < na; ++a) rho0[s * na + a] = mdp.initial[s] * mdp.policy(s, a);
  return rho0;
}

OccupancyVector occupancy_measure(const Eigen::Ref<const Matrix>& p_pi,
                                  const Eigen::Ref<const Vector>& rho0, Scalar gamma) {
  const Index n = p_pi.rows();
  const Matrix system = Matrix::Identity(n, n) - gamma * p_pi;
  Vector rho = Eigen::PartialPivLU<Matrix>(system).solve(rho0);
  const Scalar residual = (system * rho - rho0).lpNorm<Eigen::Infinity>();
  if (!(residual <= kOccupancyResidualTol)) {
    throw SolveFailedError("occupancy solve residual " + std::to_string(residual));
  }
  // Never-occupied pairs should be exactly zero; clear the round-off there.
  for (Index x = 0; x < n; ++x) {
    if (rho[x] < 0.0) {
      if (rho[x] < -kOccupancyResidualTol)
        throw SolveFailedError("occupancy solve produced a negative entry");
      rho[x] = 0.0;
    }
  }
  return {std::move(rho), gamma};
}

OccupancyVector occupancy_measure(const MdpSpec& mdp) {
  return occupancy_measure(induced_transition(mdp), initial_pair_distribution(mdp),
                           mdp.gamma);
}

}  // namespace mdpdist
