#include <doctest.h>

#include <cmath>
#include <random>

#include "mdpdist/errors.hpp"
#include "mdpdist/hitting.hpp"
#include "mdpdist/simulate.hpp"
#include "support/test_models.hpp"

using namespace mdpdist;
using namespace mdpdist::testing;

namespace {

struct Prepared {
  Matrix p;
  Vector rho0;
  Scalar gamma;
  SupportSet support;
};

Prepared prepare(const MdpSpec& spec) {
  Prepared out;
  out.p = induced_transition(spec);
  out.rho0 = initial_pair_distribution(spec);
  out.gamma = spec.gamma;
  out.support = support_set(occupancy_measure(out.p, out.rho0, spec.gamma));
  return out;
}

}  // namespace

TEST_CASE("plain hitting on the two-state chain") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const HittingMatrix t = hitting_plain(induced_transition(spec));
  CHECK(t.entries(0, 0) == 0.0);
  CHECK(t.entries(1, 1) == 0.0);
  CHECK(t.entries(0, 1) == kInfinity);  // x1 is absorbing, x0 unreachable
  CHECK(t.entries(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("plain hitting on the fair swap chain is the geometric mean") {
  const MdpSpec spec = validate(symmetric_swap_chain(0.5));
  const HittingMatrix t = hitting_plain(induced_transition(spec));
  // Frozen from the geometric distribution with success one half; the Monte
  // Carlo cross-check lives in sim_test.
  CHECK(t.entries(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.entries(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("restart hitting of the worked two-state instance") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  CHECK(t.kind == HittingKind::kRestart);
  CHECK(t.entries(0, 0) == 0.0);
  CHECK(t.entries(1, 1) == 0.0);
  CHECK(std::abs(t.entries(0, 1) - 2.0) <= 1e-10);
  CHECK(std::abs(t.entries(1, 0) - 2.0) <= 1e-10);
}

TEST_CASE("restart hitting of the self loop is the one-by-one zero matrix") {
  const MdpSpec spec = validate(single_self_loop(0.5));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  CHECK(t.entries.rows() == 1);
  CHECK(t.entries(0, 0) == 0.0);
}

TEST_CASE("restart hitting equals plain hitting of the restart matrix") {
  std::mt19937_64 rng(31);
  for (Scalar gamma : {0.3, 0.9}) {
    for (int trial = 0; trial < 15; ++trial) {
      RandomMdpOptions opt;
      opt.gamma = gamma;
      opt.max_states = 4;
      opt.max_actions = 2;
      const MdpSpec spec = validate(random_mdp(rng, opt));
      const Prepared in = prepare(spec);
      const HittingMatrix restart = hitting_restart(in.p, in.rho0, in.gamma, in.support);
      const RestartChain chain = build_restart_chain(in.p, in.rho0, in.gamma);
      const HittingMatrix plain = hitting_plain(chain.matrix);
      for (Index i : in.support.indices) {
        CHECK((restart.entries.row(i) - plain.entries.row(i)).lpNorm<Eigen::Infinity>() <=
              1e-9);
      }
    }
  }
}

TEST_CASE("discounted recursion on the two-state chain") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const HittingMatrix l = hitting_discounted(induced_transition(spec), 0.5);
  CHECK(l.kind == HittingKind::kDiscounted);
  CHECK(std::abs(l.entries(0, 1) - 2.0) <= 1e-10);  // solves L = 1 + L/2
  CHECK(std::abs(l.entries(1, 0) - 1.0) <= 1e-10);  // one deterministic step
}

TEST_CASE("discounted recursion collapses to one at gamma zero") {
  const MdpSpec spec = validate(symmetric_swap_chain(0.0));
  const HittingMatrix l = hitting_discounted(induced_transition(spec), 0.0);
  CHECK(l.entries(0, 1) == 1.0);
  CHECK(l.entries(1, 0) == 1.0);
  CHECK(l.entries(0, 0) == 0.0);
}

TEST_CASE("ratio formula reconstructs the worked instance") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const Prepared in = prepare(spec);
  const HittingMatrix l = hitting_discounted(in.p, in.gamma);
  const HittingMatrix t = restart_from_discounted(l, in.rho0, in.gamma);
  // Row x0: denominator 1, T = 2/1; row x1: denominator 1/2, T = 1/(1/2).
  CHECK(std::abs(t.entries(0, 1) - 2.0) <= 1e-10);
  CHECK(std::abs(t.entries(1, 0) - 2.0) <= 1e-10);
}

TEST_CASE("ratio formula agrees with the restart solver on support rows") {
  std::mt19937_64 rng(37);
  for (Scalar gamma : {0.3, 0.9}) {
    for (int trial = 0; trial < 15; ++trial) {
      RandomMdpOptions opt;
      opt.gamma = gamma;
      opt.max_states = 4;
      opt.max_actions = 2;
      const MdpSpec spec = validate(random_mdp(rng, opt));
      const Prepared in = prepare(spec);
      const HittingMatrix restart = hitting_restart(in.p, in.rho0, in.gamma, in.support);
      const HittingMatrix ratio = restart_from_discounted(
          hitting_discounted(in.p, in.gamma), in.rho0, in.gamma, in.support);
      for (Index i : in.support.indices) {
        CHECK((restart.entries.row(i) - ratio.entries.row(i)).lpNorm<Eigen::Infinity>() <=
              1e-8);
      }
    }
  }
}

TEST_CASE("ratio formula rejects targets outside the support") {
  // Mass starts at the absorbing end, so x0 is never occupied.
  MdpSpec spec = two_state_chain(0.5);
  spec.initial << 0.0, 1.0;
  spec = validate(spec);
  const Matrix p = induced_transition(spec);
  const Vector rho0 = initial_pair_distribution(spec);
  const HittingMatrix l = hitting_discounted(p, spec.gamma);
  CHECK_THROWS_AS(restart_from_discounted(l, rho0, spec.gamma),
                  DenominatorNotPositiveError);
}

TEST_CASE("restart rows outside the support stay infinite") {
  const MdpSpec spec = validate(car_on_road(0.9));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  const StateActionIndex idx = spec.pair_index();
  const Index steer0 = idx.of(0, 1);
  for (Index j = 0; j < in.p.rows(); ++j) {
    if (j != steer0) CHECK(t.entries(steer0, j) == kInfinity);
  }
  CHECK(t.entries(steer0, steer0) == 0.0);
  for (Index i : in.support.indices) {
    CHECK(t.entries.row(i).maxCoeff() < kInfinity);
  }
}

TEST_CASE("restart recursion residual stays below 1e-9") {
  std::mt19937_64 rng(41);
  RandomMdpOptions opt;
  opt.gamma = 0.9;
  const MdpSpec spec = validate(random_mdp(rng, opt));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  // T = 1 + (1-gamma) (T rho0) 1' + gamma T P off the diagonal.
  const Matrix tp = t.entries * in.p;
  const Vector tr = t.entries * in.rho0;
  for (Index i : in.support.indices) {
    for (Index j = 0; j < in.p.rows(); ++j) {
      if (j == i) continue;
      const Scalar residual =
          t.entries(i, j) - 1.0 - (1.0 - in.gamma) * tr[i] - in.gamma * tp(i, j);
      CHECK(std::abs(residual) <= 1e-9);
    }
  }
}

TEST_CASE("quasi-metric axioms hold on the support") {
  std::mt19937_64 rng(43);
  Scalar biggest_asymmetry = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomMdpOptions opt;
    opt.gamma = 0.9;
    opt.max_states = 4;
    opt.max_actions = 2;
    const MdpSpec spec = validate(random_mdp(rng, opt));
    const Prepared in = prepare(spec);
    const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
    const QuasiMetricReport report = quasi_metric_check(t, in.support, 1e-9);
    CHECK(report.diagonal_zero);
    CHECK(report.nonnegative);
    CHECK(report.triangle_violations.empty());
    biggest_asymmetry = std::max(biggest_asymmetry, report.max_asymmetry);
  }
  CHECK(biggest_asymmetry > 0.1);  // the quasi-distance is genuinely asymmetric
}

TEST_CASE("three-cycle restart times match the hand solve") {
  const MdpSpec spec = validate(three_cycle(0.9));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  CHECK(std::abs(t.entries(1, 0) - 1.0 / 0.9) <= 1e-10);
  CHECK(std::abs(t.entries(0, 1) - 1.9) <= 1e-10);
  CHECK(std::abs(t.entries(0, 2) - 1.0) <= 1e-10);
  const QuasiMetricReport report = quasi_metric_check(t, in.support, 1e-9);
  CHECK(report.max_asymmetry > 0.1);
}

TEST_CASE("worked instance has a symmetric quasi-metric report") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  const QuasiMetricReport report = quasi_metric_check(t, in.support, 1e-9);
  CHECK(report.pass());
  CHECK(report.max_asymmetry <= 1e-10);
}

TEST_CASE("single-point support passes the quasi-metric check trivially") {
  const MdpSpec spec = validate(single_self_loop(0.5));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  const QuasiMetricReport report = quasi_metric_check(t, in.support, 1e-9);
  CHECK(report.pass());
  CHECK(report.max_asymmetry == 0.0);
}

namespace {

// Independent oracle: Bellman iteration from zero converges monotonically to
// the minimal solution of the hitting-time recursion. Entries with certain
// absorption settle geometrically; entries with escape probability keep
// growing by a near-constant increment, so the increment ratio between
// horizons separates finite from infinite.
struct BellmanOracle {
  Matrix times;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> finite;
};

BellmanOracle bellman_hitting(const Matrix& p, long iters) {
  const Index n = p.rows();
  Matrix t = Matrix::Zero(n, n);
  Matrix prev_inc = Matrix::Zero(n, n);
  Matrix inc = Matrix::Zero(n, n);
  for (long k = 0; k < iters; ++k) {
    Matrix next = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        Scalar acc = 1.0;
        for (Index l = 0; l < n; ++l) {
          if (l != i) acc += p(l, j) * t(i, l);
        }
        next(i, j) = acc;
      }
    }
    if (k == iters / 2) prev_inc = next - t;
    if (k == iters - 1) inc = next - t;
    t = next;
  }
  BellmanOracle oracle;
  oracle.times = t;
  oracle.finite.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      oracle.finite(i, j) =
          (i == j) || inc(i, j) <= 0.5 * std::max(prev_inc(i, j), 1e-300);
  return oracle;
}

}  // namespace

TEST_CASE("plain hitting agrees with the Bellman-iteration oracle") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 12; ++trial) {
    RandomMdpOptions opt;
    opt.gamma = 0.9;
    opt.max_states = 4;
    opt.max_actions = 2;
    const MdpSpec spec = validate(random_mdp(rng, opt));
    const Matrix p = induced_transition(spec);
    const HittingMatrix t = hitting_plain(p);
    const BellmanOracle oracle = bellman_hitting(p, 4000);
    for (Index i = 0; i < p.rows(); ++i) {
      for (Index j = 0; j < p.rows(); ++j) {
        if (oracle.finite(i, j)) {
          REQUIRE(std::isfinite(t.entries(i, j)));
          CHECK(std::abs(t.entries(i, j) - oracle.times(i, j)) <=
                1e-5 * (1.0 + oracle.times(i, j)));
        } else {
          CHECK(t.entries(i, j) == kInfinity);
        }
      }
    }
  }
}

TEST_CASE("quasi-metric check flags violations in a broken matrix") {
  SupportSet all;
  all.indices = {0, 1, 2};
  HittingMatrix bad{Matrix(3, 3), HittingKind::kRestart};
  bad.entries << 0, 1, 1,  //
      1, 0, 1,             //
      10, 1, 0;            // T(2,0) = 10 > T(2,1) + T(1,0) = 2
  QuasiMetricReport report = quasi_metric_check(bad, all, 1e-9);
  CHECK(report.diagonal_zero);
  CHECK(report.nonnegative);
  REQUIRE(!report.triangle_violations.empty());
  const TriangleViolation& v = report.triangle_violations.front();
  CHECK(v.target == 2);
  CHECK(v.gap == doctest::Approx(8.0));
  CHECK(report.max_asymmetry == doctest::Approx(9.0));
  CHECK(!report.pass());

  bad.entries(0, 0) = 0.5;   // nonzero diagonal
  bad.entries(0, 1) = -1.0;  // negative time
  report = quasi_metric_check(bad, all, 1e-9);
  CHECK(!report.diagonal_zero);
  CHECK(!report.nonnegative);

  bad.entries(0, 1) = kInfinity;
  CHECK_THROWS_AS(quasi_metric_check(bad, all, 1e-9), std::invalid_argument);
}

TEST_CASE("plain hitting with a target subset leaves other rows infinite") {
  const MdpSpec spec = validate(symmetric_swap_chain(0.5));
  SupportSet only_first;
  only_first.indices = {0};
  const HittingMatrix t = hitting_plain(induced_transition(spec), only_first);
  CHECK(t.entries(0, 1) == doctest::Approx(2.0));
  CHECK(t.entries(1, 0) == kInfinity);
  CHECK(t.entries(1, 1) == 0.0);
}

TEST_CASE("off-diagonal finite hitting times are at least one") {
  std::mt19937_64 rng(47);
  const MdpSpec spec = validate(random_mdp(rng));
  const Prepared in = prepare(spec);
  const HittingMatrix t = hitting_restart(in.p, in.rho0, in.gamma, in.support);
  for (Index i = 0; i < t.entries.rows(); ++i) {
    for (Index j = 0; j < t.entries.cols(); ++j) {
      if (i == j) continue;
      const Scalar v = t.entries(i, j);
      if (std::isfinite(v)) CHECK(v >= 1.0 - 1e-12);
    }
  }
}
