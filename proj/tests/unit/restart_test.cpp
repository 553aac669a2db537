#include <doctest.h>

#include <random>

#include "mdpdist/errors.hpp"
#include "mdpdist/restart.hpp"
#include "support/test_models.hpp"

using namespace mdpdist;
using namespace mdpdist::testing;

TEST_CASE("restart chain columns blend the restart mass and the step kernel") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const RestartChain chain = build_restart_chain(spec);
  // Hand evaluation at gamma = 0.5 with rho0 a point mass at x0: both columns
  // are (0.5, 0.5).
  CHECK((chain.matrix - Matrix::Constant(2, 2, 0.5)).lpNorm<Eigen::Infinity>() <= 1e-15);

  const Matrix p = induced_transition(spec);
  const Vector rho0 = initial_pair_distribution(spec);
  Matrix rebuilt = 0.5 * p;
  rebuilt.colwise() += 0.5 * rho0;
  CHECK((chain.matrix - rebuilt).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("gamma zero gives pure restart") {
  const MdpSpec spec = validate(two_state_chain(0.0));
  const RestartChain chain = build_restart_chain(spec);
  const Vector rho0 = initial_pair_distribution(spec);
  for (Index col = 0; col < 2; ++col) {
    CHECK((chain.matrix.col(col) - rho0).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("restart chain of the self loop is the identity") {
  const RestartChain chain = build_restart_chain(validate(single_self_loop(0.5)));
  CHECK(chain.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("restart columns stay stochastic on random models") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const MdpSpec spec = validate(random_mdp(rng));
    const RestartChain chain = build_restart_chain(spec);
    CHECK((chain.matrix.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(chain.matrix.minCoeff() >= 0.0);
  }
}

TEST_CASE("stationary distribution of the two-state chain") {
  const RestartChain chain = build_restart_chain(validate(two_state_chain(0.5)));
  const Vector sigma = stationary_distribution(chain);
  // Equals (1-gamma) * occupancy = (0.5, 0.5), from the series oracle.
  CHECK(std::abs(sigma[0] - 0.5) <= 1e-10);
  CHECK(std::abs(sigma[1] - 0.5) <= 1e-10);
  CHECK(sigma.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stationary residual honors the contract") {
  std::mt19937_64 rng(19);
  const MdpSpec spec = validate(random_mdp(rng));
  const RestartChain chain = build_restart_chain(spec);
  const Vector sigma = stationary_distribution(chain, 1e-12);
  CHECK((chain.matrix * sigma - sigma).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("power iteration reports non-convergence") {
  const RestartChain chain = build_restart_chain(validate(two_state_chain(0.9)));
  CHECK_THROWS_AS(stationary_distribution(chain, 1e-13, 1), NoConvergenceError);
}

TEST_CASE("stationary limit does not depend on the start") {
  // A residual of tol pins the iterate only to within tol/(1-gamma) of the
  // fixed point, so that is the honest agreement window between runs.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  for (Scalar gamma : {0.3, 0.9, 0.99}) {
    for (int trial = 0; trial < 8; ++trial) {
      RandomMdpOptions opt;
      opt.gamma = gamma;
      const MdpSpec spec = validate(random_mdp(rng, opt));
      const RestartChain chain = build_restart_chain(spec);
      const Vector reference = stationary_distribution(chain);
      for (int s = 0; s < 3; ++s) {
        Vector start(chain.matrix.rows());
        for (Index i = 0; i < start.size(); ++i) start[i] = unit(rng);
        const Vector sigma = stationary_distribution(chain, start);
        CHECK((sigma - reference).lpNorm<Eigen::Infinity>() <=
              2.0 * kStationaryTol / (1.0 - gamma));
      }
    }
  }
}

TEST_CASE("stationary distribution of the self loop is a point mass") {
  const RestartChain chain = build_restart_chain(validate(single_self_loop(0.5)));
  const Vector sigma = stationary_distribution(chain);
  CHECK(sigma.size() == 1);
  CHECK(sigma[0] == 1.0);
}

TEST_CASE("pagerank identity holds across random models") {
  std::mt19937_64 rng(29);
  for (Scalar gamma : {0.3, 0.9, 0.99}) {
    for (int trial = 0; trial < 20; ++trial) {
      RandomMdpOptions opt;
      opt.gamma = gamma;
      opt.max_states = 4;
      opt.max_actions = 2;
      const MdpSpec spec = validate(random_mdp(rng, opt));
      const PageRankReport report = verify_pagerank_identity(spec, 1e-8);
      CHECK(report.pass);
      CHECK(report.max_abs_gap <= 1e-8);
    }
  }
}

TEST_CASE("support excludes never-selected steering pairs") {
  const MdpSpec spec = validate(car_on_road());
  const SupportSet supp = support_set(occupancy_measure(spec));
  const StateActionIndex idx = spec.pair_index();
  CHECK(supp.size() == 3);
  for (Index s = 0; s < 3; ++s) {
    CHECK(supp.contains(idx.of(s, 0)));
    CHECK(!supp.contains(idx.of(s, 1)));
  }
}

TEST_CASE("full-support model keeps every pair") {
  MdpSpec spec = symmetric_swap_chain(0.5);
  const SupportSet supp = support_set(occupancy_measure(validate(spec)));
  CHECK(supp.size() == 2);
}

TEST_CASE("two-state chain support covers both pairs") {
  const MdpSpec spec = validate(two_state_chain(0.5));
  const SupportSet supp = support_set(occupancy_measure(spec));
  CHECK(supp.indices == std::vector<Index>{0, 1});
}
