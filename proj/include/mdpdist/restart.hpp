#pragma once

#include <vector>

#include "mdpdist/mdp.hpp"
#include "mdpdist/types.hpp"

namespace mdpdist {

// Chain that restarts from rho0 with probability 1-gamma and otherwise follows
// P_pi: column x of .matrix is (1-gamma) rho0 + gamma P_pi(.|x).
struct RestartChain {
  Matrix matrix;
  Scalar gamma;
  Vector restart;
};

RestartChain build_restart_chain(const Eigen::Ref<const Matrix>& p_pi,
                                 const Eigen::Ref<const Vector>& rho0, Scalar gamma);
RestartChain build_restart_chain(const MdpSpec& mdp);

inline constexpr Scalar kStationaryTol = 1e-12;
inline constexpr long kStationaryMaxIters = 1000000;

// Power iteration until the fixed-point residual |P sigma - sigma|_inf <= tol.
// The default start is uniform; the restart mass makes the limit independent
// of the start.
Vector stationary_distribution(const RestartChain& chain, Scalar tol = kStationaryTol,
                               long max_iters = kStationaryMaxIters);
Vector stationary_distribution(const RestartChain& chain,
                               const Eigen::Ref<const Vector>& start,
                               Scalar tol = kStationaryTol,
                               long max_iters = kStationaryMaxIters);

struct PageRankReport {
  Scalar max_abs_gap;
  bool pass;
};

// |(1-gamma) rho_pi - stationary|_inf with the two sides computed by
// independent code paths (direct linear solve vs power iteration).
PageRankReport verify_pagerank_identity(const MdpSpec& mdp, Scalar tol);

struct SupportSet {
  std::vector<Index> indices;  // sorted ascending
  bool contains(Index i) const;
  Index size() const { return static_cast<Index>(indices.size()); }
};

inline constexpr Scalar kSupportThreshold = 1e-12;

// Pairs where (1-gamma) rho_pi exceeds the threshold.
SupportSet support_set(const OccupancyVector& occupancy,
                       Scalar threshold = kSupportThreshold);

}  // namespace mdpdist
