#include "mdpdist/restart.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "mdpdist/errors.hpp"

namespace mdpdist {

RestartChain build_restart_chain(const Eigen::Ref<const Matrix>& p_pi,
                                 const Eigen::Ref<const Vector>& rho0, Scalar gamma) {
  Matrix m = gamma * p_pi;
  m.colwise() += (1.0 - gamma) * rho0;
  return {std::move(m), gamma, rho0};
}

RestartChain build_restart_chain(const MdpSpec& mdp) {
  return build_restart_chain(induced_transition(mdp), initial_pair_distribution(mdp),
                             mdp.gamma);
}

Vector stationary_distribution(const RestartChain& chain, Scalar tol, long max_iters) {
  const Index n = chain.matrix.rows();
  return stationary_distribution(chain, Vector::Constant(n, 1.0 / static_cast<Scalar>(n)),
                                 tol, max_iters);
}

Vector stationary_distribution(const RestartChain& chain,
                               const Eigen::Ref<const Vector>& start, Scalar tol,
                               long max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("stationary_distribution: tol must be > 0");
  Vector sigma = start / start.sum();
  Vector next(sigma.size());
  for (long it = 0; it < max_iters; ++it) {
    next.noalias() = chain.matrix * sigma;
    if ((next - sigma).lpNorm<Eigen::Infinity>() <= tol) return sigma;
    sigma = next / next.sum();
  }
  throw NoConvergenceError("power iteration did not reach tol", max_iters);
}

PageRankReport verify_pagerank_identity(const MdpSpec& mdp, Scalar tol) {
  const Matrix p = induced_transition(mdp);
  const Vector rho0 = initial_pair_distribution(mdp);
  const OccupancyVector occ = occupancy_measure(p, rho0, mdp.gamma);
  const RestartChain chain = build_restart_chain(p, rho0, mdp.gamma);
  const Vector sigma = stationary_distribution(chain);
  const Scalar gap = ((1.0 - mdp.gamma) * occ.values - sigma).lpNorm<Eigen::Infinity>();
  return {gap, gap <= tol};
}

bool SupportSet::contains(Index i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

SupportSet support_set(const OccupancyVector& occupancy, Scalar threshold) {
  if (threshold < 0.0) throw std::invalid_argument("support_set: threshold must be >= 0");
  SupportSet out;
  const Scalar scale = 1.0 - occupancy.gamma;
  for (Index x = 0; x < occupancy.values.size(); ++x) {
    if (scale * occupancy.values[x] > threshold) out.indices.push_back(x);
  }
  if (out.indices.empty())
    throw EmptySupportError("occupancy measure has empty support");
  return out;
}

}  // namespace mdpdist
