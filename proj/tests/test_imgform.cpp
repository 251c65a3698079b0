#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <random>

#include "uwnerf/imgform.hpp"

using uwnerf::imgform::WaterParams;
using Eigen::Vector3d;

namespace {

Vector3d random01(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("WaterParams validation") {
  WaterParams ok{{0.4, 0.2, 0.1}, {0.1, 0.15, 0.3}};
  CHECK_NOTHROW(ok.validate());

  WaterParams neg_beta{{-0.1, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(neg_beta.validate(), std::invalid_argument);

  WaterParams bad_veil{{0, 0, 0}, {0, 0, 1.5}};
  CHECK_THROWS_AS(bad_veil.validate(), std::invalid_argument);

  WaterParams nan_beta{{std::nan(""), 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(nan_beta.validate(), std::invalid_argument);
}

TEST_CASE("transmission closed forms") {
  WaterParams zero;
  CHECK(uwnerf::imgform::transmission(zero, 5.0) == Vector3d::Ones());

  WaterParams half{{0.5, 0.5, 0.5}, Vector3d::Zero()};
  const Vector3d t = uwnerf::imgform::transmission(half, 2.0);
  for (int c = 0; c < 3; ++c) CHECK(t[c] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  WaterParams mixed{{0.1, 0.2, 0.3}, Vector3d::Zero()};
  const Vector3d t10 = uwnerf::imgform::transmission(mixed, 10.0);
  CHECK(t10[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(t10[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(t10[2] == doctest::Approx(std::exp(-3.0)).epsilon(1e-15));
}

TEST_CASE("transmission at zero range is exactly one") {
  WaterParams params{{1.3, 0.7, 0.2}, Vector3d::Zero()};
  CHECK(uwnerf::imgform::transmission(params, 0.0) == Vector3d::Ones());
}

TEST_CASE("transmission strictly decreasing in range for positive beta") {
  WaterParams params{{0.3, 0.3, 0.3}, Vector3d::Zero()};
  double prev = uwnerf::imgform::transmission(params, 0.0)[0];
  for (double d = 0.5; d <= 4.0; d += 0.5) {
    const double cur = uwnerf::imgform::transmission(params, d)[0];
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("transmission rejects bad ranges") {
  WaterParams params;
  CHECK_THROWS_AS(uwnerf::imgform::transmission(params, -0.1), std::domain_error);
  CHECK_THROWS_AS(uwnerf::imgform::transmission(params, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(uwnerf::imgform::transmission(params, INFINITY), std::domain_error);
}

TEST_CASE("degrade identity at zero attenuation") {
  WaterParams params{Vector3d::Zero(), {0.9, 0.9, 0.9}};
  const Vector3d j(0.8, 0.4, 0.2);
  CHECK(uwnerf::imgform::degrade(j, params, 123.0) == j);
}

TEST_CASE("degrade full-extinction limit approaches veiling light") {
  WaterParams params{{50, 50, 50}, {0.1, 0.3, 0.5}};
  const Vector3d out = uwnerf::imgform::degrade({0.9, 0.2, 0.7}, params, 1.0);
  CHECK((out - params.veiling).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("degrade pure attenuation without backscatter") {
  WaterParams params{{0.5, 0.5, 0.5}, Vector3d::Zero()};
  const Vector3d out = uwnerf::imgform::degrade(Vector3d::Ones(), params, 2.0);
  for (int c = 0; c < 3; ++c) CHECK(out[c] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("degrade rejects out-of-range in-air color") {
  WaterParams params;
  CHECK_THROWS_AS(uwnerf::imgform::degrade({1.2, 0, 0}, params, 1.0), std::domain_error);
  CHECK_THROWS_AS(uwnerf::imgform::degrade({-0.2, 0, 0}, params, 1.0), std::domain_error);
}

TEST_CASE("degraded channels non-increasing in range when veiling is zero") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> beta_u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    WaterParams params{{beta_u(rng), beta_u(rng), beta_u(rng)}, Vector3d::Zero()};
    const Vector3d j = random01(rng);
    Vector3d prev = uwnerf::imgform::degrade(j, params, 0.0);
    for (double d = 0.5; d <= 5.0; d += 0.5) {
      const Vector3d cur = uwnerf::imgform::degrade(j, params, d);
      for (int c = 0; c < 3; ++c) CHECK(cur[c] <= prev[c] + 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("restore round-trips degrade within 1e-9") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> range_u(0.0, 5.0);
  double worst = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const double range = range_u(rng);
    WaterParams params;
    for (int c = 0; c < 3; ++c) {
      params.beta[c] = range > 0 ? std::min(1.0, 5.0 / range) * u(rng) : u(rng);
      params.veiling[c] = u(rng);
    }
    const Vector3d j = random01(rng);
    const Vector3d i = uwnerf::imgform::degrade(j, params, range);
    const Vector3d back = uwnerf::imgform::restore(i, params, range);
    worst = std::max(worst, (back - j).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("restore of pure backscatter observation is zero") {
  WaterParams params{{0.4, 0.2, 0.1}, {0.3, 0.5, 0.7}};
  const Vector3d i = uwnerf::imgform::degrade(Vector3d::Zero(), params, 2.0);
  const Vector3d j = uwnerf::imgform::restore(i, params, 2.0);
  CHECK(j.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("restore is the identity when beta is zero") {
  WaterParams params{Vector3d::Zero(), {0.2, 0.4, 0.6}};
  const Vector3d i(0.35, 0.72, 0.11);
  CHECK(uwnerf::imgform::restore(i, params, 9.0) == i);
}

TEST_CASE("restore divides by the floor when transmission collapses") {
  WaterParams params{{10, 10, 10}, {0.5, 0.5, 0.5}};
  const double range = 10.0;  // t = e^-100, far below the floor
  const Vector3d i(0.6, 0.6, 0.6);
  const Vector3d j = uwnerf::imgform::restore(i, params, range);
  // (0.6 - (1 - t) * 0.5) / 1e-3 with t ~ 0
  for (int c = 0; c < 3; ++c) CHECK(j[c] == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("restore honors a custom transmission floor") {
  WaterParams params{{5, 5, 5}, Vector3d::Zero()};
  const Vector3d i(0.2, 0.2, 0.2);
  const Vector3d j = uwnerf::imgform::restore(i, params, 100.0, 0.5);
  for (int c = 0; c < 3; ++c) CHECK(j[c] == doctest::Approx(0.4).epsilon(1e-12));
}
