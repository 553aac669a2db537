#include "mdpdist/gw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "mdpdist/errors.hpp"
#include "mdpdist/simulate.hpp"

namespace mdpdist {
namespace {

// ---------------------------------------------------------------------------
// Quadratic objective
//
// F(mu) = sum_{x,x',y,y'} (T_X(x,x') - T_Y(y,y'))^2 mu(x,y) mu(x',y')
//       = p' TX2 p + q' TY2 q - 2 <mu, TX mu TY'>          (p, q marginals)
// The reported distance is 0.5 sqrt(F).
// ---------------------------------------------------------------------------

struct Quadratic {
  Matrix tx, ty;    // hitting matrices
  Matrix tx2, ty2;  // elementwise squares
  Vector a, b;      // target marginals

  static Quadratic make(const MetricMeasureTriple& x, const MetricMeasureTriple& y) {
    Quadratic q;
    q.tx = x.hitting;
    q.ty = y.hitting;
    q.tx2 = x.hitting.array().square();
    q.ty2 = y.hitting.array().square();
    q.a = x.measure;
    q.b = y.measure;
    return q;
  }

  // Marginal-expansion form: fast, but the three terms cancel near zero, so
  // it only guides the optimizer. Reported values use quad_direct.
  Scalar quad_expanded(const Matrix& mu) const {
    const Vector p = mu.rowwise().sum();
    const Vector q = mu.colwise().sum().transpose();
    const Scalar cross = mu.cwiseProduct(tx * mu * ty.transpose()).sum();
    return p.dot(tx2 * p) + q.dot(ty2 * q) - 2.0 * cross;
  }

  // Direct sum of nonnegative terms; exact at and near zero.
  Scalar quad_direct(const Matrix& mu) const {
    const Index m = mu.rows();
    const Index n = mu.cols();
    Scalar total = 0.0;
    for (Index x = 0; x < m; ++x)
      for (Index y = 0; y < n; ++y) {
        const Scalar w = mu(x, y);
        if (w == 0.0) continue;
        for (Index xp = 0; xp < m; ++xp)
          for (Index yp = 0; yp < n; ++yp) {
            const Scalar d = tx(x, xp) - ty(y, yp);
            total += d * d * w * mu(xp, yp);
          }
      }
    return total;
  }

  Scalar distance(const Matrix& mu) const {
    return 0.5 * std::sqrt(std::max<Scalar>(quad_direct(mu), 0.0));
  }

  // Gradient of F up to additive row/column constants, which the marginal
  // constraints annihilate.
  Matrix gradient(const Matrix& mu) const {
    return -2.0 * (tx * mu * ty.transpose() + tx.transpose() * mu * ty);
  }
};

// Exact minimizer of the one-dimensional quadratic t -> F(mu + t d) on [0, 1].
struct SegmentMin {
  Scalar t;
  Scalar value;
};

SegmentMin minimize_on_segment(const Quadratic& obj, const Matrix& mu, const Matrix& d,
                               Scalar f0) {
  const Scalar f1 = obj.quad_expanded(mu + d);
  const Scalar fh = obj.quad_expanded(mu + 0.5 * d);
  SegmentMin best{0.0, f0};
  if (fh < best.value) best = {0.5, fh};
  if (f1 < best.value) best = {1.0, f1};
  const Scalar curv = 2.0 * f0 - 4.0 * fh + 2.0 * f1;
  if (curv > 0.0) {
    const Scalar slope = f1 - f0 - curv;
    const Scalar tstar = std::clamp(-slope / (2.0 * curv), 0.0, 1.0);
    const Scalar fstar = obj.quad_expanded(mu + tstar * d);
    if (fstar < best.value) best = {tstar, fstar};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Polytope machinery
// ---------------------------------------------------------------------------

// Euclidean projection onto {X : X 1 = a, X' 1 = b}.
Matrix project_affine(const Matrix& x, const Vector& a, const Vector& b) {
  const Index m = x.rows();
  const Index n = x.cols();
  const Vector r = a - x.rowwise().sum();
  const Vector c = b - x.colwise().sum().transpose();
  Matrix out = x;
  out.colwise() += r / static_cast<Scalar>(n);
  out.rowwise() += (c / static_cast<Scalar>(m)).transpose();
  out.array() -= r.sum() / static_cast<Scalar>(m * n);
  return out;
}

// Dykstra alternation between the marginal affine set and the nonnegative
// orthant; converges to the Euclidean projection onto the coupling polytope.
Matrix project_polytope(Matrix x, const Vector& a, const Vector& b, int max_iters = 400,
                        Scalar tol = 1e-13) {
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  Matrix q = p;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix y = project_affine(x + p, a, b);
    p += x - y;
    x = (y + q).cwiseMax(0.0);
    q += y - x;
    const Scalar row_gap = (x.rowwise().sum() - a).lpNorm<Eigen::Infinity>();
    const Scalar col_gap =
        (x.colwise().sum().transpose() - b).lpNorm<Eigen::Infinity>();
    if (std::max(row_gap, col_gap) <= tol) break;
  }
  return x;
}

// Shrink rows then columns to fit under the marginals, then restore the mass
// deficit with a rank-one update; the result meets the marginals exactly up
// to round-off.
Matrix round_to_marginals(Matrix mu, const Vector& a, const Vector& b) {
  mu = mu.cwiseMax(0.0);
  for (Index i = 0; i < mu.rows(); ++i) {
    const Scalar rs = mu.row(i).sum();
    if (rs > a[i] && rs > 0.0) mu.row(i) *= a[i] / rs;
  }
  for (Index j = 0; j < mu.cols(); ++j) {
    const Scalar cs = mu.col(j).sum();
    if (cs > b[j] && cs > 0.0) mu.col(j) *= b[j] / cs;
  }
  const Vector erra = (a - mu.rowwise().sum()).cwiseMax(0.0);
  const Vector errb = (b - mu.colwise().sum().transpose()).cwiseMax(0.0);
  const Scalar s = erra.sum();
  if (s > 0.0) mu += erra * errb.transpose() / s;
  return mu;
}

// ---------------------------------------------------------------------------
// Entropic transport subproblem (log-domain alternating marginal scaling)
// ---------------------------------------------------------------------------

struct ScalingResult {
  Matrix coupling;
  Scalar gap = kInfinity;
  bool converged = false;
};

ScalingResult scale_to_marginals(const Matrix& cost, const Vector& a, const Vector& b,
                                 Scalar eps, long max_iters, Scalar tol, Vector* f_io,
                                 Vector* g_io) {
  const Index m = cost.rows();
  const Index n = cost.cols();
  const Vector loga = a.array().log();
  const Vector logb = b.array().log();
  Vector f = (f_io && f_io->size() == m) ? *f_io : Vector::Zero(m);
  Vector g = (g_io && g_io->size() == n) ? *g_io : Vector::Zero(n);

  Matrix logmu(m, n);
  ScalingResult result;
  logmu = ((-cost).colwise() + f).rowwise() + g.transpose();
  result.coupling = (logmu / eps).array().exp();
  Scalar best_gap = kInfinity;
  long since_improvement = 0;
  for (long it = 0; it < max_iters; ++it) {
    // f_i <- eps (log a_i - lse_j((g_j - C_ij)/eps))
    for (Index i = 0; i < m; ++i) {
      const auto row = (g.transpose() - cost.row(i)) / eps;
      const Scalar hi = row.maxCoeff();
      f[i] = eps * (loga[i] - (hi + std::log((row.array() - hi).exp().sum())));
    }
    for (Index j = 0; j < n; ++j) {
      const auto col = (f - cost.col(j)) / eps;
      const Scalar hi = col.maxCoeff();
      g[j] = eps * (logb[j] - (hi + std::log((col.array() - hi).exp().sum())));
    }
    logmu = ((-cost).colwise() + f).rowwise() + g.transpose();
    result.coupling = (logmu / eps).array().exp();
    const Scalar row_gap =
        (result.coupling.rowwise().sum() - a).lpNorm<Eigen::Infinity>();
    const Scalar col_gap =
        (result.coupling.colwise().sum().transpose() - b).lpNorm<Eigen::Infinity>();
    result.gap = std::max(row_gap, col_gap);
    if (result.gap <= tol) {
      result.converged = true;
      break;
    }
    // When the cost oscillation dwarfs eps the linear rate degenerates; stop
    // burning iterations once the gap stops moving. The caller rounds the
    // coupling to exact marginals regardless.
    if (result.gap < 0.99 * best_gap) {
      best_gap = result.gap;
      since_improvement = 0;
    } else if (++since_improvement >= 200) {
      break;
    }
  }
  if (f_io) *f_io = f;
  if (g_io) *g_io = g;
  return result;
}

// ---------------------------------------------------------------------------
// Local optimization
// ---------------------------------------------------------------------------

// Projected gradient with an exact quadratic line search. Monotone in F, so
// it can only improve whatever seed it is given.
Matrix polish(const Quadratic& obj, Matrix mu, int max_rounds = 200) {
  const Scalar lipschitz = 4.0 * obj.tx.norm() * obj.ty.norm() + 2.0 * obj.tx2.norm() +
                           2.0 * obj.ty2.norm() + 1.0;
  Scalar eta = 1.0 / lipschitz;
  const Scalar eta_floor = eta * 1e-10;
  const Scalar eta_ceil = eta * 1e6;
  Scalar f = obj.quad_expanded(mu);
  for (int round = 0; round < max_rounds; ++round) {
    const Matrix g = obj.gradient(mu);
    const Matrix target = project_polytope(mu - eta * g, obj.a, obj.b);
    const Matrix d = target - mu;
    if (d.lpNorm<Eigen::Infinity>() < 1e-15) break;
    const SegmentMin s = minimize_on_segment(obj, mu, d, f);
    if (s.value >= f - 1e-16 * (1.0 + std::abs(f))) {
      eta *= 0.25;
      if (eta < eta_floor) break;
      continue;
    }
    mu += s.t * d;
    f = s.value;
    if (s.t >= 0.999) {
      eta = std::min(eta * 2.0, eta_ceil);
    } else if (s.t <= 0.25) {
      eta *= 0.5;
    }
  }
  return mu;
}

// Polish, round to exact marginals, and keep whichever of the rounded seed
// and the rounded polished point is better under the exact objective. The
// polish chases the cancellation-prone expanded form, so it must never be
// allowed to lose an exact seed.
Scalar finish(const Quadratic& obj, Matrix mu, Matrix* out) {
  Matrix seed = round_to_marginals(mu, obj.a, obj.b);
  Matrix polished = round_to_marginals(polish(obj, std::move(mu)), obj.a, obj.b);
  const Scalar f_seed = obj.quad_direct(seed);
  const Scalar f_polished = obj.quad_direct(polished);
  if (f_seed <= f_polished) {
    *out = std::move(seed);
    return f_seed;
  }
  *out = std::move(polished);
  return f_polished;
}

std::vector<Scalar> default_epsilon_schedule(const Quadratic& obj) {
  // Scale set by the median squared hitting-difference across the two spaces.
  std::vector<Scalar> diffs;
  diffs.reserve(static_cast<std::size_t>(obj.tx.size()) *
                static_cast<std::size_t>(obj.ty.size()));
  for (Index i = 0; i < obj.tx.size(); ++i)
    for (Index j = 0; j < obj.ty.size(); ++j) {
      const Scalar d = obj.tx.data()[i] - obj.ty.data()[j];
      diffs.push_back(d * d);
    }
  auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  const Scalar scale = (*mid > 0.0) ? *mid : 1.0;
  std::vector<Scalar> schedule(8);
  for (int k = 0; k < 8; ++k)
    schedule[static_cast<std::size_t>(k)] = scale * std::pow(10.0, -3.0 * k / 7.0);
  return schedule;
}

// Annealed fixed-point scheme: at each epsilon, rescale the linearized cost
// and move along the segment toward the scaled coupling, keeping F monotone.
// Reports the worst marginal gap seen at the final epsilon level.
Matrix anneal(const Quadratic& obj, Matrix mu, const std::vector<Scalar>& schedule,
              long scale_iters, Scalar scale_tol, Scalar* final_level_gap) {
  Vector f_pot, g_pot;
  Scalar level_gap = kInfinity;
  for (Scalar eps : schedule) {
    level_gap = 0.0;
    for (int inner = 0; inner < 10; ++inner) {
      const ScalingResult r = scale_to_marginals(obj.gradient(mu), obj.a, obj.b, eps,
                                                 scale_iters, scale_tol, &f_pot, &g_pot);
      level_gap = std::max(level_gap, r.gap);
      const Scalar f0 = obj.quad_expanded(mu);
      const Matrix d = r.coupling - mu;
      const SegmentMin s = minimize_on_segment(obj, mu, d, f0);
      if (s.t <= 0.0 || s.value >= f0) break;
      mu += s.t * d;
      if ((s.t * d).lpNorm<Eigen::Infinity>() < 1e-12) break;
    }
  }
  if (final_level_gap) *final_level_gap = level_gap;
  return mu;
}

Matrix product_coupling(const Vector& a, const Vector& b) {
  return a * b.transpose() / b.sum();
}

// Greedy fill over a shuffled cell order; lands on a vertex of the polytope.
Matrix random_vertex(const Vector& a, const Vector& b, EpisodeRng& rng) {
  const Index m = a.size();
  const Index n = b.size();
  std::vector<std::pair<Index, Index>> cells;
  cells.reserve(static_cast<std::size_t>(m * n));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) cells.emplace_back(i, j);
  for (std::size_t k = cells.size(); k > 1; --k) {
    const auto swap_with = static_cast<std::size_t>(rng.next_unit() * static_cast<double>(k));
    std::swap(cells[k - 1], cells[std::min(swap_with, k - 1)]);
  }
  Vector row_left = a;
  Vector col_left = b;
  Matrix mu = Matrix::Zero(m, n);
  for (const auto& [i, j] : cells) {
    const Scalar w = std::min(row_left[i], col_left[j]);
    if (w <= 0.0) continue;
    mu(i, j) = w;
    row_left[i] -= w;
    col_left[j] -= w;
  }
  return mu;
}

// Interior perturbation of the product coupling and greedy vertices in
// alternation; the mix covers both smooth and combinatorial basins.
Matrix random_feasible(const Vector& a, const Vector& b, std::uint64_t seed, long k) {
  EpisodeRng rng(seed, static_cast<std::uint64_t>(k));
  if (k % 2 == 0) return round_to_marginals(random_vertex(a, b, rng), a, b);
  Matrix mu(a.size(), b.size());
  for (Index i = 0; i < mu.rows(); ++i)
    for (Index j = 0; j < mu.cols(); ++j)
      mu(i, j) = (0.25 + rng.next_unit()) * a[i] * b[j];
  // proportional fitting toward the marginals, then exact rounding
  for (int pass = 0; pass < 50; ++pass) {
    const Vector rs = mu.rowwise().sum();
    for (Index i = 0; i < mu.rows(); ++i) mu.row(i) *= a[i] / rs[i];
    const Vector cs = mu.colwise().sum().transpose();
    for (Index j = 0; j < mu.cols(); ++j) mu.col(j) *= b[j] / cs[j];
  }
  return round_to_marginals(mu, a, b);
}

void require_matching_mass(const MetricMeasureTriple& x, const MetricMeasureTriple& y) {
  const Scalar mass_x = x.measure.sum();
  const Scalar mass_y = y.measure.sum();
  if (std::abs(mass_x - mass_y) > kCouplingFeasibilityTol)
    throw InfeasibleCouplingError(mass_x, mass_y);
}

// Deterministic total order used to make gw_exhaustive exactly symmetric.
bool triple_less(const MetricMeasureTriple& x, const MetricMeasureTriple& y) {
  if (x.size() != y.size()) return x.size() < y.size();
  for (Index i = 0; i < x.measure.size(); ++i) {
    if (x.measure[i] != y.measure[i]) return x.measure[i] < y.measure[i];
  }
  for (Index i = 0; i < x.hitting.size(); ++i) {
    if (x.hitting.data()[i] != y.hitting.data()[i])
      return x.hitting.data()[i] < y.hitting.data()[i];
  }
  return x.labels < y.labels;
}

// ---------------------------------------------------------------------------
// Grid scan over the polytope's free block (rows 0..m-2, cols 0..n-2)
// ---------------------------------------------------------------------------

// Fill the dependent entries implied by the free block; reject when any of
// them would need to be meaningfully negative.
bool complete_coupling(Matrix& mu, const Vector& a, const Vector& b) {
  const Index m = mu.rows();
  const Index n = mu.cols();
  constexpr Scalar slack = -1e-12;
  for (Index i = 0; i + 1 < m; ++i) {
    const Scalar v = a[i] - mu.row(i).head(n - 1).sum();
    if (v < slack) return false;
    mu(i, n - 1) = std::max(v, 0.0);
  }
  for (Index j = 0; j + 1 < n; ++j) {
    const Scalar v = b[j] - mu.col(j).head(m - 1).sum();
    if (v < slack) return false;
    mu(m - 1, j) = std::max(v, 0.0);
  }
  const Scalar corner = a[m - 1] - mu.row(m - 1).head(n - 1).sum();
  if (corner < slack) return false;
  mu(m - 1, n - 1) = std::max(corner, 0.0);
  return true;
}

void append_grid_seeds(const Quadratic& obj, int keep, std::vector<Matrix>* seeds) {
  const Index m = obj.a.size();
  const Index n = obj.b.size();
  const Index dims = (m - 1) * (n - 1);
  if (dims == 0) return;  // the coupling is unique; the product seed covers it

  // 200 points per free coordinate when that is affordable, otherwise spread
  // a fixed evaluation budget across the dimensions.
  long res = 200;
  if (dims > 2)
    res = std::max<long>(
        2, static_cast<long>(std::pow(1.0e5, 1.0 / static_cast<double>(dims))));

  std::vector<Scalar> hi(static_cast<std::size_t>(dims));
  for (Index i = 0; i + 1 < m; ++i)
    for (Index j = 0; j + 1 < n; ++j)
      hi[static_cast<std::size_t>(i * (n - 1) + j)] = std::min(obj.a[i], obj.b[j]);

  std::vector<long> digit(static_cast<std::size_t>(dims), 0);
  Matrix mu = Matrix::Zero(m, n);
  std::vector<std::pair<Scalar, Matrix>> best;  // ascending by F
  while (true) {
    for (Index i = 0; i + 1 < m; ++i)
      for (Index j = 0; j + 1 < n; ++j) {
        const auto d = static_cast<std::size_t>(i * (n - 1) + j);
        mu(i, j) = hi[d] * static_cast<Scalar>(digit[d]) / static_cast<Scalar>(res - 1);
      }
    if (complete_coupling(mu, obj.a, obj.b)) {
      const Scalar f = obj.quad_direct(mu);
      if (static_cast<int>(best.size()) < keep || f < best.back().first) {
        const auto pos = std::upper_bound(
            best.begin(), best.end(), f,
            [](Scalar v, const std::pair<Scalar, Matrix>& e) { return v < e.first; });
        best.emplace(pos, f, mu);
        if (static_cast<int>(best.size()) > keep) best.pop_back();
      }
    }
    Index carry = 0;
    while (carry < dims) {
      auto& d = digit[static_cast<std::size_t>(carry)];
      if (++d < res) break;
      d = 0;
      ++carry;
    }
    if (carry == dims) break;
  }
  for (auto& entry : best) seeds->push_back(std::move(entry.second));
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

MetricMeasureTriple build_triple(const MdpSpec& mdp, bool normalize) {
  const Matrix p = induced_transition(mdp);
  const Vector rho0 = initial_pair_distribution(mdp);
  const OccupancyVector occ = occupancy_measure(p, rho0, mdp.gamma);
  const SupportSet supp = support_set(occ);
  const HittingMatrix hit = hitting_restart(p, rho0, mdp.gamma, supp);
  const StateActionIndex idx = mdp.pair_index();

  const Index k = supp.size();
  MetricMeasureTriple out;
  out.labels.reserve(static_cast<std::size_t>(k));
  out.measure.resize(k);
  out.hitting.resize(k, k);
  const Scalar scale = normalize ? (1.0 - mdp.gamma) : 1.0;
  for (Index r = 0; r < k; ++r) {
    const Index i = supp.indices[static_cast<std::size_t>(r)];
    out.labels.push_back(idx.pair_label(i));
    out.measure[r] = scale * occ.values[i];
    for (Index c = 0; c < k; ++c)
      out.hitting(r, c) = hit.entries(i, supp.indices[static_cast<std::size_t>(c)]);
  }
  if (!out.hitting.allFinite())
    throw SolveFailedError("hitting times not finite on support");
  return out;
}

CouplingReport check_coupling(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                              const Coupling& mu) {
  if (mu.matrix.rows() != x.size() || mu.matrix.cols() != y.size())
    throw std::invalid_argument("check_coupling: coupling shape does not match supports");
  CouplingReport report;
  report.max_row_gap = (mu.matrix.rowwise().sum() - x.measure).cwiseAbs().maxCoeff();
  report.max_col_gap =
      (mu.matrix.colwise().sum().transpose() - y.measure).cwiseAbs().maxCoeff();
  report.min_entry = mu.matrix.minCoeff();
  return report;
}

Scalar gw_objective(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                    const Coupling& mu) {
  const CouplingReport report = check_coupling(x, y, mu);
  if (!report.feasible(kCouplingFeasibilityTol)) {
    throw InfeasibleCouplingError(std::max(
        {report.max_row_gap, report.max_col_gap, std::max(-report.min_entry, 0.0)}));
  }
  return Quadratic::make(x, y).distance(mu.matrix);
}

GwResult gw_solve(const MetricMeasureTriple& x, const MetricMeasureTriple& y,
                  const GwSolveParams& params) {
  if (params.restarts < 1)
    throw std::invalid_argument("gw_solve: restarts must be >= 1");
  require_matching_mass(x, y);
  const Quadratic obj = Quadratic::make(x, y);
  const std::vector<Scalar> schedule =
      params.epsilon_schedule.empty() ? default_epsilon_schedule(obj)
                                      : params.epsilon_schedule;

  // A restart counts as broken only when its final scaled coupling is far
  // from the polytope; smaller shortfalls are repaired exactly by rounding
  // and the result is still a valid upper bound.
  const Scalar broken_gap = 0.05 * obj.a.sum();
  Scalar best_value = kInfinity;
  Matrix best_mu;
  int broken = 0;
  for (int k = 0; k < params.restarts; ++k) {
    Matrix start = (k == 0) ? product_coupling(obj.a, obj.b)
                            : random_feasible(obj.a, obj.b, params.seed, k);
    Scalar final_gap = kInfinity;
    Matrix mu = anneal(obj, std::move(start), schedule, params.max_iters, params.tol,
                       &final_gap);
    if (!(final_gap <= broken_gap)) ++broken;
    Matrix rounded;
    const Scalar f = finish(obj, std::move(mu), &rounded);
    const Scalar value = 0.5 * std::sqrt(std::max<Scalar>(f, 0.0));
    // Restarts within 1e-12 of the best keep the earlier index.
    if (value < best_value - 1e-12) {
      best_value = value;
      best_mu = std::move(rounded);
    }
  }
  if (broken == params.restarts)
    throw NoConvergenceError("marginal scaling stagnated in every restart",
                             params.max_iters);
  GwResult result;
  result.value = best_value;
  result.coupling = Coupling{std::move(best_mu)};
  result.status = GwStatus::kUpperBound;
  result.restarts_used = params.restarts;
  return result;
}

GwResult gw_exhaustive(const MetricMeasureTriple& x, const MetricMeasureTriple& y) {
  if (x.size() > kExhaustiveLimit || y.size() > kExhaustiveLimit)
    throw TooLargeError("gw_exhaustive handles supports of at most " +
                        std::to_string(kExhaustiveLimit) + " points");
  require_matching_mass(x, y);
  // Canonical argument order makes the search exactly symmetric.
  if (triple_less(y, x)) {
    GwResult swapped = gw_exhaustive(y, x);
    swapped.coupling.matrix.transposeInPlace();
    return swapped;
  }

  const Quadratic obj = Quadratic::make(x, y);
  std::vector<Matrix> seeds;
  seeds.push_back(product_coupling(obj.a, obj.b));
  if (x.size() == y.size()) {
    // Every permutation coupling; these are the optima of equivalent triples.
    std::vector<Index> perm(static_cast<std::size_t>(x.size()));
    std::iota(perm.begin(), perm.end(), Index{0});
    do {
      Matrix mu = Matrix::Zero(x.size(), y.size());
      for (Index i = 0; i < x.size(); ++i)
        mu(i, perm[static_cast<std::size_t>(i)]) =
            std::min(obj.a[i], obj.b[perm[static_cast<std::size_t>(i)]]);
      seeds.push_back(round_to_marginals(std::move(mu), obj.a, obj.b));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  // Entropic solver seeds, both orientations.
  GwSolveParams sp;
  sp.restarts = 12;
  try {
    seeds.push_back(gw_solve(x, y, sp).coupling.matrix);
  } catch (const NoConvergenceError&) {
  }
  try {
    seeds.push_back(gw_solve(y, x, sp).coupling.matrix.transpose());
  } catch (const NoConvergenceError&) {
  }
  append_grid_seeds(obj, 10, &seeds);

  Scalar best_value = kInfinity;
  Matrix best_mu;
  for (Matrix& seed : seeds) {
    Matrix rounded;
    const Scalar f = finish(obj, std::move(seed), &rounded);
    const Scalar value = 0.5 * std::sqrt(std::max<Scalar>(f, 0.0));
    if (value < best_value - 1e-12) {
      best_value = value;
      best_mu = std::move(rounded);
    }
  }
  GwResult result;
  result.value = best_value;
  result.coupling = Coupling{std::move(best_mu)};
  result.status = GwStatus::kExact;
  result.restarts_used = static_cast<int>(seeds.size());
  return result;
}

std::optional<std::vector<Index>> equivalence_check(const MetricMeasureTriple& x,
                                                    const MetricMeasureTriple& y,
                                                    Scalar tol) {
  if (x.size() != y.size()) throw SizeMismatchError(x.size(), y.size());
  const Index n = x.size();
  const Vector a = x.measure / x.measure.sum();
  const Vector b = y.measure / y.measure.sum();

  // Sorted in/out hitting-time profiles; a candidate pair must agree on both.
  const auto profiles = [](const Matrix& t) {
    std::vector<std::pair<Vector, Vector>> out;
    out.reserve(static_cast<std::size_t>(t.rows()));
    for (Index i = 0; i < t.rows(); ++i) {
      Vector in = t.row(i).transpose();
      Vector out_times = t.col(i);
      std::sort(in.data(), in.data() + in.size());
      std::sort(out_times.data(), out_times.data() + out_times.size());
      out.emplace_back(std::move(in), std::move(out_times));
    }
    return out;
  };
  const auto px = profiles(x.hitting);
  const auto py = profiles(y.hitting);

  std::vector<std::vector<Index>> candidates(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (std::abs(a[i] - b[j]) > tol) continue;
      const bool rows_match =
          ((px[static_cast<std::size_t>(i)].first - py[static_cast<std::size_t>(j)].first)
               .cwiseAbs()
               .maxCoeff() <= tol);
      const bool cols_match =
          ((px[static_cast<std::size_t>(i)].second -
            py[static_cast<std::size_t>(j)].second)
               .cwiseAbs()
               .maxCoeff() <= tol);
      if (rows_match && cols_match) candidates[static_cast<std::size_t>(i)].push_back(j);
    }
    if (candidates[static_cast<std::size_t>(i)].empty()) return std::nullopt;
  }

  // Most-constrained-first backtracking.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index l, Index r) {
    return candidates[static_cast<std::size_t>(l)].size() <
           candidates[static_cast<std::size_t>(r)].size();
  });

  std::vector<Index> phi(static_cast<std::size_t>(n), -1);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<Index> assigned;
  assigned.reserve(static_cast<std::size_t>(n));

  const auto consistent = [&](Index i, Index j) {
    for (Index prev : assigned) {
      const Index pj = phi[static_cast<std::size_t>(prev)];
      if (std::abs(x.hitting(i, prev) - y.hitting(j, pj)) > tol) return false;
      if (std::abs(x.hitting(prev, i) - y.hitting(pj, j)) > tol) return false;
    }
    return true;
  };

  const auto search = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == order.size()) return true;
    const Index i = order[depth];
    for (Index j : candidates[static_cast<std::size_t>(i)]) {
      if (used[static_cast<std::size_t>(j)] || !consistent(i, j)) continue;
      phi[static_cast<std::size_t>(i)] = j;
      used[static_cast<std::size_t>(j)] = 1;
      assigned.push_back(i);
      if (self(self, depth + 1)) return true;
      assigned.pop_back();
      used[static_cast<std::size_t>(j)] = 0;
      phi[static_cast<std::size_t>(i)] = -1;
    }
    return false;
  };

  if (!search(search, 0)) return std::nullopt;
  return phi;
}

}  // namespace mdpdist
