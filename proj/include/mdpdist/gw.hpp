#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdpdist/hitting.hpp"
#include "mdpdist/mdp.hpp"
#include "mdpdist/types.hpp"

namespace mdpdist {

// Support-restricted (labels, measure, hitting-time) triple. hitting(i, j) is
// the expected time from j to i; finite everywhere on support.
struct MetricMeasureTriple {
  std::vector<std::string> labels;
  Vector measure;
  Matrix hitting;
  Index size() const { return measure.size(); }
};

// (supp(rho_pi), (1-gamma) rho_pi, restart hitting times). With
// normalize=false the measure keeps its raw 1/(1-gamma) total mass.
MetricMeasureTriple build_triple(const MdpSpec& mdp, bool normalize = true);

struct Coupling {
  Matrix matrix;  // |X| x |Y|, nonnegative, marginals = the two measures
};

struct CouplingReport {
  Scalar max_row_gap = 0.0;  // against the measure of X
  Scalar max_col_gap = 0.0;  // against the measure of Y
  Scalar min_entry = 0.0;
  bool feasible(Scalar tol) const {
    return max_row_gap <= tol && max_col_gap <= tol && min_entry >= -tol;
  }
};

CouplingReport check_coupling(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                              const Coupling& mu);

inline constexpr Scalar kCouplingFeasibilityTol = 1e-9;

// 0.5 * sqrt( sum_{x,y} sum_{x',y'} |T_X(x,x') - T_Y(y,y')|^2 mu(x,y) mu(x',y') ).
// Throws InfeasibleCouplingError when mu misses its marginals.
Scalar gw_objective(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                    const Coupling& mu);

enum class GwStatus { kExact, kUpperBound };

struct GwResult {
  Scalar value = 0.0;
  Coupling coupling;
  GwStatus status = GwStatus::kUpperBound;
  int restarts_used = 0;
};

inline constexpr Index kExhaustiveLimit = 4;

// Global minimization for supports of at most kExhaustiveLimit points: dense
// grid over the coupling polytope's free coordinates, permutation and solver
// seeds, projected-gradient polish. Deterministic and exactly symmetric in
// its arguments.
GwResult gw_exhaustive(const MetricMeasureTriple& x, const MetricMeasureTriple& y);

struct GwSolveParams {
  std::vector<Scalar> epsilon_schedule;  // empty: geometric 1 -> 1e-3 in 8 steps,
                                         // scaled by the median squared difference
  int restarts = 16;
  std::uint64_t seed = 0;
  long max_iters = 5000;  // scaling iterations per subproblem
  Scalar tol = 1e-10;     // marginal gap target for the scaling loop
};

// Entropic multi-restart solver: linearize the quadratic at the current
// coupling, solve the entropic transport subproblem by alternating marginal
// scaling, anneal epsilon downward, polish, round to exact marginals. The
// reported value is the exact objective of the returned coupling, an upper
// bound on the true minimum.
GwResult gw_solve(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                  const GwSolveParams& params = {});

inline constexpr Scalar kEquivalenceTol = 1e-8;

// Measure- and hitting-preserving bijection between the supports, if one
// exists; measures are compared after normalization. phi[i] is the Y index
// matched to X's point i. Throws SizeMismatchError when the supports differ
// in cardinality.
std::optional<std::vector<Index>> equivalence_check(const MetricMeasureTriple& x,
                                                    const MetricMeasureTriple& y,
                                                    Scalar tol = kEquivalenceTol);

}  // namespace mdpdist
