#include "mdpdist/hitting.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdpdist/errors.hpp"

namespace mdpdist {
namespace {

// Support digraph of the chain: edge x -> x' iff p(x'|x) > 0.
struct Digraph {
  std::vector<std::vector<Index>> succ;
  std::vector<std::vector<Index>> pred;
};

Digraph build_digraph(const Eigen::Ref<const Matrix>& p) {
  const Index n = p.rows();
  Digraph g{std::vector<std::vector<Index>>(n), std::vector<std::vector<Index>>(n)};
  for (Index from = 0; from < n; ++from) {
    for (Index to = 0; to < n; ++to) {
      if (p(to, from) > 0.0) {
        g.succ[from].push_back(to);
        g.pred[to].push_back(from);
      }
    }
  }
  return g;
}

// Starts from which `target` is hit with probability one: the complement of
// the set that can wander, without touching the target, to a state that
// cannot reach it at all.
std::vector<char> certain_hit_set(const Digraph& g, Index target) {
  const Index n = static_cast<Index>(g.succ.size());
  std::vector<char> reaches(n, 0);
  std::vector<Index> stack{target};
  reaches[target] = 1;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index w : g.pred[u]) {
      if (!reaches[w]) {
        reaches[w] = 1;
        stack.push_back(w);
      }
    }
  }
  std::vector<char> doomed(n, 0);
  for (Index x = 0; x < n; ++x) {
    if (!reaches[x]) {
      doomed[x] = 1;
      stack.push_back(x);
    }
  }
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index w : g.pred[u]) {
      if (w != target && !doomed[w]) {
        doomed[w] = 1;
        stack.push_back(w);
      }
    }
  }
  std::vector<char> certain(n, 0);
  for (Index x = 0; x < n; ++x) certain[x] = !doomed[x];
  return certain;
}

// Solves t_j = 1 + discount * sum_{k != target} p(k|j) t_k over `starts`,
// which must be closed under successors away from the target.
Vector solve_target_system(const Eigen::Ref<const Matrix>& p, Index target,
                           const std::vector<Index>& starts, Scalar discount) {
  const Index m = static_cast<Index>(starts.size());
  std::vector<Index> local(static_cast<std::size_t>(p.rows()), -1);
  for (Index j = 0; j < m; ++j) local[starts[j]] = j;

  Matrix a = Matrix::Identity(m, m);
  for (Index jl = 0; jl < m; ++jl) {
    const Index j = starts[jl];
    for (Index k = 0; k < p.rows(); ++k) {
      const Scalar coeff = p(k, j);
      if (coeff == 0.0 || k == target) continue;
      const Index kl = local[k];
      if (kl < 0)
        throw SolveFailedError("hitting system escapes its certain-hit set");
      a(jl, kl) -= discount * coeff;
    }
  }
  const Vector rhs = Vector::Ones(m);
  Vector t = Eigen::PartialPivLU<Matrix>(a).solve(rhs);
  const Scalar residual = (a * t - rhs).lpNorm<Eigen::Infinity>();
  if (!(residual <= kHittingResidualTol)) {
    throw SolveFailedError("hitting solve residual " + std::to_string(residual) +
                           " for target " + std::to_string(target));
  }
  return t;
}

HittingMatrix hitting_plain_impl(const Eigen::Ref<const Matrix>& p,
                                 const std::vector<Index>& targets) {
  const Index n = p.rows();
  Matrix entries = Matrix::Constant(n, n, kInfinity);
  entries.diagonal().setZero();
  const Digraph g = build_digraph(p);
  std::vector<Index> starts;
  for (Index i : targets) {
    const std::vector<char> certain = certain_hit_set(g, i);
    starts.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i && certain[j]) starts.push_back(j);
    }
    if (starts.empty()) continue;
    const Vector t = solve_target_system(p, i, starts, 1.0);
    for (Index jl = 0; jl < static_cast<Index>(starts.size()); ++jl)
      entries(i, starts[jl]) = t[jl];
  }
  return {std::move(entries), HittingKind::kPlain};
}

}  // namespace

HittingMatrix hitting_plain(const Eigen::Ref<const Matrix>& p) {
  std::vector<Index> all(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) all[i] = i;
  return hitting_plain_impl(p, all);
}

HittingMatrix hitting_plain(const Eigen::Ref<const Matrix>& p, const SupportSet& targets) {
  return hitting_plain_impl(p, targets.indices);
}

HittingMatrix hitting_restart(const Eigen::Ref<const Matrix>& p_pi,
                              const Eigen::Ref<const Vector>& rho0, Scalar gamma,
                              const SupportSet& support) {
  const RestartChain chain = build_restart_chain(p_pi, rho0, gamma);
  HittingMatrix out = hitting_plain(chain.matrix, support);
  out.kind = HittingKind::kRestart;
  return out;
}

HittingMatrix hitting_discounted(const Eigen::Ref<const Matrix>& p_pi, Scalar gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw GammaOutOfRangeError(gamma);
  const Index n = p_pi.rows();
  Matrix entries = Matrix::Zero(n, n);
  std::vector<Index> starts;
  starts.reserve(static_cast<std::size_t>(n) - 1);
  for (Index i = 0; i < n; ++i) {
    starts.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) starts.push_back(j);
    }
    if (starts.empty()) continue;
    const Vector t = solve_target_system(p_pi, i, starts, gamma);
    for (Index jl = 0; jl < static_cast<Index>(starts.size()); ++jl)
      entries(i, starts[jl]) = t[jl];
  }
  return {std::move(entries), HittingKind::kDiscounted};
}

namespace {

// Shared body of the two ratio-formula overloads; rows outside `rows` stay
// +inf off the diagonal.
HittingMatrix ratio_rows(const HittingMatrix& discounted,
                         const Eigen::Ref<const Vector>& rho0, Scalar gamma,
                         const std::vector<Index>& rows) {
  if (discounted.kind != HittingKind::kDiscounted)
    throw std::invalid_argument("restart_from_discounted expects a discounted matrix");
  const Index n = discounted.entries.rows();
  Matrix entries = Matrix::Constant(n, n, kInfinity);
  entries.diagonal().setZero();
  for (Index i : rows) {
    const Scalar denom = 1.0 - (1.0 - gamma) * discounted.entries.row(i).dot(rho0);
    if (!(denom > kDenominatorFloor)) throw DenominatorNotPositiveError(i, denom);
    entries.row(i) = discounted.entries.row(i) / denom;
    entries(i, i) = 0.0;
  }
  return {std::move(entries), HittingKind::kRestart};
}

}  // namespace

HittingMatrix restart_from_discounted(const HittingMatrix& discounted,
                                      const Eigen::Ref<const Vector>& rho0, Scalar gamma) {
  std::vector<Index> all(static_cast<std::size_t>(discounted.entries.rows()));
  for (Index i = 0; i < discounted.entries.rows(); ++i) all[i] = i;
  return ratio_rows(discounted, rho0, gamma, all);
}

HittingMatrix restart_from_discounted(const HittingMatrix& discounted,
                                      const Eigen::Ref<const Vector>& rho0, Scalar gamma,
                                      const SupportSet& support) {
  return ratio_rows(discounted, rho0, gamma, support.indices);
}

QuasiMetricReport quasi_metric_check(const HittingMatrix& t, const SupportSet& support,
                                     Scalar tol) {
  const std::vector<Index>& idx = support.indices;
  QuasiMetricReport report;
  for (Index i : idx) {
    for (Index j : idx) {
      const Scalar v = t.entries(i, j);
      if (!std::isfinite(v))
        throw std::invalid_argument("quasi_metric_check: non-finite entry on support");
      if (i == j && v != 0.0) report.diagonal_zero = false;
      if (v < 0.0) report.nonnegative = false;
      if (i != j) {
        const Scalar back = t.entries(j, i);
        const Scalar asym = std::abs(v - back);
        if (asym > report.max_asymmetry) report.max_asymmetry = asym;
      }
    }
  }
  // T(i,k) <= T(i,j) + T(j,k): going through j never beats the direct time.
  for (Index i : idx) {
    for (Index j : idx) {
      for (Index k : idx) {
        const Scalar gap = t.entries(i, k) - t.entries(i, j) - t.entries(j, k);
        if (gap > tol) report.triangle_violations.push_back({i, j, k, gap});
      }
    }
  }
  return report;
}

}  // namespace mdpdist
