#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdpdist/mdp.hpp"
#include "mdpdist/restart.hpp"
#include "mdpdist/types.hpp"

namespace mdpdist {

struct SimConfig {
  std::uint64_t seed = 0;
  long episodes = 1;
  long max_steps = 1;
  long horizon = 0;  // truncation depth for series computations
};

struct Estimate {
  Scalar mean = 0.0;
  Scalar std_error = 0.0;
  long samples = 0;   // episodes run
  long censored = 0;  // episodes that exhausted max_steps
};

// Deterministic stream keyed by (seed, episode); episodes may run in any
// order and still reproduce bit-for-bit.
class EpisodeRng {
 public:
  EpisodeRng(std::uint64_t seed, std::uint64_t episode);
  double next_unit();  // uniform in [0, 1)

 private:
  std::uint64_t state_;
};

// Truncated series sum_{t<=H} gamma^t P_pi^t rho0, paired with the geometric
// tail bound gamma^{H+1} / (1-gamma) that caps the entrywise error.
std::pair<Vector, Scalar> occupancy_truncated(const Eigen::Ref<const Matrix>& p_pi,
                                              const Eigen::Ref<const Vector>& rho0,
                                              Scalar gamma, long horizon);
std::pair<Vector, Scalar> occupancy_truncated(const MdpSpec& mdp, long horizon);

// One sampled path of config.max_steps transitions; the starting pair is
// included, so the result has max_steps + 1 entries.
std::vector<Index> simulate_restart(const RestartChain& chain, Index start,
                                    const SimConfig& config, long episode = 0);

// Monte Carlo mean first-passage time of `target` from `start` under the
// column-stochastic chain p. Episodes exceeding max_steps are censored and
// excluded from the mean.
Estimate estimate_hitting(const Eigen::Ref<const Matrix>& p, Index target, Index start,
                          const SimConfig& config);

// Empirical visit frequencies over all episodes after discarding a burn-in of
// max(100, 10/(1-gamma)) steps per episode.
Vector estimate_stationary(const RestartChain& chain, const SimConfig& config);

}  // namespace mdpdist
