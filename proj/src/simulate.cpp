#include "mdpdist/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mdpdist/errors.hpp"

namespace mdpdist {
namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Inverse-CDF step down column `current`; falls back to the last positive
// entry when round-off lets the scan run past the total mass.
Index sample_column(const Eigen::Ref<const Matrix>& p, Index current, double u) {
  const Index n = p.rows();
  Scalar acc = 0.0;
  for (Index x = 0; x < n; ++x) {
    acc += p(x, current);
    if (u < acc) return x;
  }
  for (Index x = n; x-- > 0;) {
    if (p(x, current) > 0.0) return x;
  }
  return n - 1;
}

Index sample_vector(const Eigen::Ref<const Vector>& dist, double u) {
  const Index n = dist.size();
  Scalar acc = 0.0;
  for (Index x = 0; x < n; ++x) {
    acc += dist[x];
    if (u < acc) return x;
  }
  for (Index x = n; x-- > 0;) {
    if (dist[x] > 0.0) return x;
  }
  return n - 1;
}

}  // namespace

EpisodeRng::EpisodeRng(std::uint64_t seed, std::uint64_t episode) : state_(seed) {
  // Avalanche the state itself so per-episode streams are decorrelated, not
  // just offset along one splitmix sequence.
  state_ = splitmix64(state_);
  state_ += episode * 0x9E3779B97F4A7C15ull;
  state_ = splitmix64(state_);
}

double EpisodeRng::next_unit() {
  return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
}

std::pair<Vector, Scalar> occupancy_truncated(const Eigen::Ref<const Matrix>& p_pi,
                                              const Eigen::Ref<const Vector>& rho0,
                                              Scalar gamma, long horizon) {
  if (horizon < 0) throw std::invalid_argument("occupancy_truncated: horizon must be >= 0");
  Vector term = rho0;
  Vector acc = rho0;
  for (long t = 1; t <= horizon; ++t) {
    term = gamma * (p_pi * term);
    acc += term;
  }
  const Scalar bound = std::pow(gamma, static_cast<Scalar>(horizon + 1)) / (1.0 - gamma);
  return {std::move(acc), bound};
}

std::pair<Vector, Scalar> occupancy_truncated(const MdpSpec& mdp, long horizon) {
  return occupancy_truncated(induced_transition(mdp), initial_pair_distribution(mdp),
                             mdp.gamma, horizon);
}

std::vector<Index> simulate_restart(const RestartChain& chain, Index start,
                                    const SimConfig& config, long episode) {
  if (start < 0 || start >= chain.matrix.rows())
    throw std::invalid_argument("simulate_restart: start index out of range");
  EpisodeRng rng(config.seed, static_cast<std::uint64_t>(episode));
  std::vector<Index> path;
  path.reserve(static_cast<std::size_t>(config.max_steps) + 1);
  Index x = start;
  path.push_back(x);
  for (long t = 0; t < config.max_steps; ++t) {
    x = sample_column(chain.matrix, x, rng.next_unit());
    path.push_back(x);
  }
  return path;
}

Estimate estimate_hitting(const Eigen::Ref<const Matrix>& p, Index target, Index start,
                          const SimConfig& config) {
  if (target == start)
    throw std::invalid_argument("estimate_hitting: diagonal is zero by definition");
  if (config.episodes < 1 || config.max_steps < 1)
    throw std::invalid_argument("estimate_hitting: episodes and max_steps must be >= 1");

  std::vector<Scalar> durations;
  durations.reserve(static_cast<std::size_t>(config.episodes));
  long censored = 0;
  for (long e = 0; e < config.episodes; ++e) {
    EpisodeRng rng(config.seed, static_cast<std::uint64_t>(e));
    Index x = start;
    long steps = 0;
    bool hit = false;
    while (steps < config.max_steps) {
      x = sample_column(p, x, rng.next_unit());
      ++steps;
      if (x == target) {
        hit = true;
        break;
      }
    }
    if (hit) {
      durations.push_back(static_cast<Scalar>(steps));
    } else {
      ++censored;
    }
  }
  if (durations.empty())
    throw AllCensoredError("every episode exhausted max_steps without hitting the target");

  const auto n = static_cast<Scalar>(durations.size());
  Scalar mean = 0.0;
  for (Scalar d : durations) mean += d;
  mean /= n;
  Scalar var = 0.0;
  if (durations.size() > 1) {
    for (Scalar d : durations) var += (d - mean) * (d - mean);
    var /= (n - 1.0);
  }
  return {mean, std::sqrt(var / n), config.episodes, censored};
}

Vector estimate_stationary(const RestartChain& chain, const SimConfig& config) {
  const Index n = chain.matrix.rows();
  const long burnin =
      std::max<long>(100, static_cast<long>(std::ceil(10.0 / (1.0 - chain.gamma))));
  std::vector<long> counts(static_cast<std::size_t>(n), 0);
  long total = 0;
  for (long e = 0; e < config.episodes; ++e) {
    EpisodeRng rng(config.seed, static_cast<std::uint64_t>(e));
    Index x = sample_vector(chain.restart, rng.next_unit());
    for (long t = 1; t <= config.max_steps; ++t) {
      x = sample_column(chain.matrix, x, rng.next_unit());
      if (t > burnin) {
        ++counts[x];
        ++total;
      }
    }
  }
  if (total == 0)
    throw std::invalid_argument("estimate_stationary: max_steps does not exceed burn-in");
  Vector freq(n);
  for (Index x = 0; x < n; ++x)
    freq[x] = static_cast<Scalar>(counts[x]) / static_cast<Scalar>(total);
  return freq;
}

}  // namespace mdpdist
