#pragma once

#include <vector>

#include "mdpdist/restart.hpp"
#include "mdpdist/types.hpp"

namespace mdpdist {

enum class HittingKind { kPlain, kRestart, kDiscounted };

// entries(i, j) = expected number of steps to first reach pair i starting from
// pair j. Diagonal is exactly zero; starts that cannot reach a target with
// probability one carry +inf.
struct HittingMatrix {
  Matrix entries;
  HittingKind kind;
};

inline constexpr Scalar kHittingResidualTol = 1e-9;

// Mean first-hitting times of a column-stochastic chain, one linear solve per
// target: T_ij = 1 + sum_k T_ik p(k|j) for j != i. With `targets`, rows
// outside it are left +inf off the diagonal.
HittingMatrix hitting_plain(const Eigen::Ref<const Matrix>& p);
HittingMatrix hitting_plain(const Eigen::Ref<const Matrix>& p, const SupportSet& targets);

// Hitting times of the restart chain built from (p_pi, rho0, gamma); the same
// solver applied to the restart matrix. Rows outside `support` are +inf.
HittingMatrix hitting_restart(const Eigen::Ref<const Matrix>& p_pi,
                              const Eigen::Ref<const Vector>& rho0, Scalar gamma,
                              const SupportSet& support);

// Discounted path lengths: L_ij = 1 + gamma sum_k L_ik P_pi(k|j) for j != i.
// Finite everywhere when gamma < 1.
HittingMatrix hitting_discounted(const Eigen::Ref<const Matrix>& p_pi, Scalar gamma);

inline constexpr Scalar kDenominatorFloor = 1e-12;

// T_ij = L_ij / (1 - (1-gamma) sum_k L_ik rho0(k)). Throws when a requested
// row's denominator is not positive, which happens exactly when the target
// lies outside supp(rho_pi). The overload with a SupportSet computes only the
// supported rows and leaves the rest +inf.
HittingMatrix restart_from_discounted(const HittingMatrix& discounted,
                                      const Eigen::Ref<const Vector>& rho0, Scalar gamma);
HittingMatrix restart_from_discounted(const HittingMatrix& discounted,
                                      const Eigen::Ref<const Vector>& rho0, Scalar gamma,
                                      const SupportSet& support);

struct TriangleViolation {
  Index target, via, start;  // T(target,start) > T(target,via) + T(via,start) + tol
  Scalar gap;
};

struct QuasiMetricReport {
  bool diagonal_zero = true;
  bool nonnegative = true;
  std::vector<TriangleViolation> triangle_violations;
  Scalar max_asymmetry = 0.0;
  bool pass() const {
    return diagonal_zero && nonnegative && triangle_violations.empty();
  }
};

// Verifies the quasi-distance axioms on support x support; entries there must
// be finite.
QuasiMetricReport quasi_metric_check(const HittingMatrix& t, const SupportSet& support,
                                     Scalar tol);

}  // namespace mdpdist
