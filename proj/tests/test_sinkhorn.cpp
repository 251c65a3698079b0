#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "uwnerf/sinkhorn.hpp"

using namespace uwnerf::sinkhorn;
using Eigen::Vector3d;

namespace {

std::vector<Vector3d> random_points(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector3d> pts;
  for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng)});
  return pts;
}

// Uniform-weight OT with n = m is an assignment problem; brute force over
// permutations is exact for n <= 8.
double assignment_cost(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                       CostMetric metric) {
  const CostMatrix cm = cost_matrix(mu, nu, metric);
  const int n = mu.size();
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (int i = 0; i < n; ++i) total += cm.m(i, perm[static_cast<size_t>(i)]);
    best = std::min(best, total / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::pair<double, double> marginal_violation(const TransportPlan& plan,
                                             const DiscreteDistribution& mu,
                                             const DiscreteDistribution& nu) {
  const Eigen::VectorXd row = plan.plan.rowwise().sum() - mu.weights;
  const Eigen::VectorXd col = plan.plan.colwise().sum().transpose() - nu.weights;
  return {row.lpNorm<Eigen::Infinity>(), col.lpNorm<Eigen::Infinity>()};
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(DiscreteDistribution::uniform({{0, 0, 0}, {1, 1, 1}}).validate());

  DiscreteDistribution empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  DiscreteDistribution neg = DiscreteDistribution::uniform({{0, 0, 0}, {1, 1, 1}});
  neg.weights << -0.5, 1.5;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

  DiscreteDistribution off = DiscreteDistribution::uniform({{0, 0, 0}, {1, 1, 1}});
  off.weights << 0.6, 0.6;
  CHECK_THROWS_AS(off.validate(), std::invalid_argument);

  DiscreteDistribution nan_pt = DiscreteDistribution::uniform({{0, 0, 0}});
  nan_pt.points[0][1] = std::nan("");
  CHECK_THROWS_AS(nan_pt.validate(), std::invalid_argument);
}

TEST_CASE("config validation") {
  SinkhornConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.reg_lambda = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.marginal_tol = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("cost matrix closed forms") {
  const auto single = DiscreteDistribution::uniform({{0.3, 0.4, 0.5}});
  const CostMatrix m1 = cost_matrix(single, single, CostMetric::kSquaredEuclidean);
  CHECK(m1.m.rows() == 1);
  CHECK(m1.m(0, 0) == 0.0);

  const auto two = DiscreteDistribution::uniform({{0, 0, 0}, {1, 0, 0}});
  const CostMatrix m2 = cost_matrix(two, two, CostMetric::kSquaredEuclidean);
  CHECK(m2.m(0, 0) == 0.0);
  CHECK(m2.m(0, 1) == 1.0);
  CHECK(m2.m(1, 0) == 1.0);
  CHECK(m2.m(1, 1) == 0.0);
}

TEST_CASE("cost matrix matches brute-force pairwise distances") {
  std::mt19937_64 rng(5);
  const auto mu = DiscreteDistribution::uniform(random_points(4, rng));
  const auto nu = DiscreteDistribution::uniform(random_points(3, rng));
  const CostMatrix sq = cost_matrix(mu, nu, CostMetric::kSquaredEuclidean);
  const CostMatrix eu = cost_matrix(mu, nu, CostMetric::kEuclidean);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double d2 = (mu.points[static_cast<size_t>(i)] - nu.points[static_cast<size_t>(j)])
                            .squaredNorm();
      CHECK(sq.m(i, j) == doctest::Approx(d2).epsilon(1e-15));
      CHECK(eu.m(i, j) == doctest::Approx(std::sqrt(d2)).epsilon(1e-15));
    }
  }
}

TEST_CASE("cost matrix is symmetric on shared support") {
  std::mt19937_64 rng(8);
  const auto mu = DiscreteDistribution::uniform(random_points(5, rng));
  const CostMatrix m = cost_matrix(mu, mu, CostMetric::kSquaredEuclidean);
  CHECK((m.m - m.m.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  for (int i = 0; i < 5; ++i) CHECK(m.m(i, i) == 0.0);
}

TEST_CASE("single-point instance transports all mass at zero cost") {
  const auto mu = DiscreteDistribution::uniform({{0.2, 0.5, 0.8}});
  const TransportPlan plan = solve(mu, mu, {});
  CHECK(plan.plan.rows() == 1);
  CHECK(plan.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plan.cost == doctest::Approx(0.0));
  CHECK(plan.converged);
}

TEST_CASE("two identical points give near-zero cost at lambda 100") {
  const auto mu = DiscreteDistribution::uniform({{0, 0, 0}, {1, 1, 1}});
  SinkhornConfig cfg;
  cfg.reg_lambda = 100.0;
  CHECK(loss(mu, mu, cfg) < 1e-3);
}

TEST_CASE("2x2 plan matches the exact LP enumerated over the transport polytope") {
  // mu uniform on {p0, p1}, nu uniform on {q0, q1}. Feasible plans form the
  // segment T(t) = [[t, .5-t], [.5-t, t]], t in [0, .5]; the LP optimum sits
  // at an endpoint.
  const auto mu = DiscreteDistribution::uniform({{0, 0, 0}, {1, 0, 0}});
  const auto nu = DiscreteDistribution::uniform({{0.1, 0, 0}, {0.9, 0, 0}});
  const CostMatrix cm = cost_matrix(mu, nu, CostMetric::kSquaredEuclidean);
  double exact = std::numeric_limits<double>::infinity();
  for (double t : {0.0, 0.5}) {
    exact = std::min(exact, t * (cm.m(0, 0) + cm.m(1, 1)) +
                                (0.5 - t) * (cm.m(0, 1) + cm.m(1, 0)));
  }
  SinkhornConfig cfg;
  cfg.reg_lambda = 1e3;
  const TransportPlan plan = solve(mu, nu, cfg);
  CHECK(plan.cost == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("sinkhorn approaches the brute-force assignment cost as lambda grows") {
  std::mt19937_64 rng(17);
  const auto mu = DiscreteDistribution::uniform(random_points(5, rng));
  const auto nu = DiscreteDistribution::uniform(random_points(5, rng));
  const double exact = assignment_cost(mu, nu, CostMetric::kSquaredEuclidean);

  SinkhornConfig cfg;
  cfg.max_iters = 100000;
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {10.0, 100.0, 1000.0}) {
    cfg.reg_lambda = lambda;
    const double cost = loss(mu, nu, cfg);
    // The plan is only feasible to marginal_tol, so the LP bound and the
    // monotone gap hold up to that slack.
    CHECK(cost >= exact - 1e-4);
    CHECK(cost <= prev + 1e-6);
    prev = cost;
  }
  CHECK(prev == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("marginal feasibility on random instances") {
  std::mt19937_64 rng(23);
  SinkhornConfig cfg;
  cfg.max_iters = 300000;  // lambda = 100 contracts slowly on diffuse instances
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu = DiscreteDistribution::uniform(random_points(6, rng));
    const auto nu = DiscreteDistribution::uniform(random_points(9, rng));
    const TransportPlan plan = solve(mu, nu, cfg);
    CHECK(plan.converged);
    CHECK(plan.plan.minCoeff() >= 0.0);
    const auto [row_err, col_err] = marginal_violation(plan, mu, nu);
    CHECK(row_err <= cfg.marginal_tol);
    CHECK(col_err <= cfg.marginal_tol);
  }
}

TEST_CASE("loss between distant singletons equals the ground cost") {
  const auto mu = DiscreteDistribution::uniform({{0, 0, 0}});
  const auto nu = DiscreteDistribution::uniform({{1, 1, 1}});
  CHECK(loss(mu, nu, {}) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("translation of an 8-point cloud costs the squared shift") {
  std::mt19937_64 rng(31);
  auto pts = random_points(8, rng);
  const auto mu = DiscreteDistribution::uniform(pts);
  for (auto& p : pts) p.x() += 0.1;
  const auto nu = DiscreteDistribution::uniform(pts);
  SinkhornConfig cfg;
  cfg.reg_lambda = 1e3;
  cfg.max_iters = 20000;
  CHECK(loss(mu, nu, cfg) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("loss is symmetric") {
  std::mt19937_64 rng(37);
  const auto mu = DiscreteDistribution::uniform(random_points(6, rng));
  const auto nu = DiscreteDistribution::uniform(random_points(6, rng));
  // The cost carries O(marginal_tol) error, so symmetry at 1e-9 needs a
  // matching convergence tolerance.
  SinkhornConfig cfg;
  cfg.marginal_tol = 1e-11;
  cfg.max_iters = 200000;
  const double ab = loss(mu, nu, cfg);
  const double ba = loss(nu, mu, cfg);
  CHECK(std::abs(ab - ba) < 1e-9);
}

TEST_CASE("naive kernel underflow raises an error advising log-domain mode") {
  const auto mu = DiscreteDistribution::uniform({{0, 0, 0}});
  const auto nu = DiscreteDistribution::uniform({{10, 10, 10}});
  SinkhornConfig cfg;
  cfg.log_domain = false;
  cfg.reg_lambda = 1e4;  // exp(-1e4 * 300) underflows to zero
  CHECK_THROWS_WITH_AS(static_cast<void>(solve(mu, nu, cfg)),
                       doctest::Contains("log-domain"), std::runtime_error);
  cfg.log_domain = true;
  CHECK_NOTHROW(static_cast<void>(solve(mu, nu, cfg)));
}

TEST_CASE("zero-weight atoms receive no plan mass") {
  DiscreteDistribution mu;
  mu.points = {{0, 0, 0}, {5, 5, 5}, {1, 1, 1}};
  mu.weights = Eigen::Vector3d(0.5, 0.0, 0.5);
  const auto nu = DiscreteDistribution::uniform({{0, 0, 0}, {1, 1, 1}});
  const TransportPlan plan = solve(mu, nu, {});
  CHECK(plan.converged);
  CHECK(plan.plan.row(1).lpNorm<Eigen::Infinity>() == 0.0);
  const auto [row_err, col_err] = marginal_violation(plan, mu, nu);
  CHECK(row_err <= 1e-6);
  CHECK(col_err <= 1e-6);
  // the far-away zero-weight atom must not affect the cost
  CHECK(plan.cost < 1e-3);
}

TEST_CASE("unconverged solves are reported") {
  std::mt19937_64 rng(41);
  const auto mu = DiscreteDistribution::uniform(random_points(8, rng));
  const auto nu = DiscreteDistribution::uniform(random_points(8, rng));
  SinkhornConfig cfg;
  cfg.reg_lambda = 1e3;
  cfg.max_iters = 2;
  const TransportPlan plan = solve(mu, nu, cfg);
  CHECK_FALSE(plan.converged);
  CHECK(plan.iterations == 2);
}
