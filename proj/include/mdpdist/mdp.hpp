#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mdpdist/types.hpp"

namespace mdpdist {

// Canonical enumeration of state-action pairs, lexicographic in
// (state position, action position): index = state * |A| + action.
class StateActionIndex {
 public:
  StateActionIndex(std::vector<std::string> states, std::vector<std::string> actions);

  Index size() const { return num_states_ * num_actions_; }
  Index num_states() const { return num_states_; }
  Index num_actions() const { return num_actions_; }

  Index of(Index state, Index action) const { return state * num_actions_ + action; }
  std::pair<Index, Index> split(Index pair) const {
    return {pair / num_actions_, pair % num_actions_};
  }

  const std::string& state_label(Index state) const { return states_[state]; }
  const std::string& action_label(Index action) const { return actions_[action]; }
  std::string pair_label(Index pair) const;  // "<state>,<action>"
  std::vector<std::string> pair_labels() const;

  std::optional<Index> find_state(std::string_view label) const;
  std::optional<Index> find_action(std::string_view label) const;
  // Every pair index whose "<state>,<action>" label equals the given string.
  // More than one hit means the label is ambiguous (labels may contain commas).
  std::vector<Index> find_pairs(std::string_view label) const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  Index num_states_;
  Index num_actions_;
  std::unordered_map<std::string, Index> state_lookup_;
  std::unordered_map<std::string, Index> action_lookup_;
};

// Finite MDP with a fixed initial distribution and stationary policy.
// transition(x, s') = P(s'|s,a) for pair index x = (s,a); policy(s,a) = pi(a|s);
// initial(s) = rho0(s). Rewards are carried for round-tripping only; no
// computation in this library reads them.
struct MdpSpec {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Matrix transition;  // (|S||A|) x |S|
  Matrix policy;      // |S| x |A|
  Vector initial;     // |S|
  Vector reward;      // |S||A|
  Scalar gamma = 0.0;
  std::vector<std::string> warnings;  // filled by validate() when it renormalizes

  Index num_states() const { return static_cast<Index>(states.size()); }
  Index num_actions() const { return static_cast<Index>(actions.size()); }
  Index num_pairs() const { return num_states() * num_actions(); }
  StateActionIndex pair_index() const { return {states, actions}; }
};

// Rows whose sums stray from one by at most this are accepted unchanged.
inline constexpr Scalar kStochasticTol = 1e-12;
// Strays up to this are renormalized with a warning; anything worse is rejected.
inline constexpr Scalar kRenormalizeTol = 1e-9;

// Checks shapes, ranges and stochasticity of every distribution in the spec.
// Returns the (possibly renormalized) spec; renormalizations are recorded in
// .warnings, harder violations throw.
MdpSpec validate(MdpSpec spec);

// Induced chain over state-action pairs: entry (x', x) = P(s'|s,a) pi(a'|s')
// for x = (s,a), x' = (s',a'). Columns sum to one.
Matrix induced_transition(const MdpSpec& mdp);

// rho0 over pairs: rho0(s) pi(a|s).
Vector initial_pair_distribution(const MdpSpec& mdp);

struct OccupancyVector {
  Vector values;  // over StateActionIndex; sums to 1/(1-gamma)
  Scalar gamma;
};

inline constexpr Scalar kOccupancyResidualTol = 1e-10;

// Discounted occupancy by a dense solve of (I - gamma P_pi) rho = rho0.
OccupancyVector occupancy_measure(const Eigen::Ref<const Matrix>& p_pi,
                                  const Eigen::Ref<const Vector>& rho0, Scalar gamma);
OccupancyVector occupancy_measure(const MdpSpec& mdp);

}  // namespace mdpdist
