#include <doctest.h>

#include <cmath>

#include "meltblow/errors.hpp"
#include "meltblow/validation.hpp"

using namespace meltblow;

TEST_SUITE("validation") {

TEST_CASE("random point pairs respect their ranges") {
  const auto pairs = random_point_pairs(500, 3, 2.0, 0.3);
  REQUIRE(pairs.size() == 500);
  double max_sep = 0.0;
  for (const auto& p : pairs) {
    for (int i = 0; i < 3; ++i) CHECK((p.a.x[i] >= -1.0 && p.a.x[i] <= 1.0));
    CHECK((p.a.t >= 0.0 && p.a.t <= 0.5));
    const double lag = p.b.t - p.a.t;
    CHECK((lag >= 0.0 && lag <= 0.3));
    const double sep = norm(p.b.x - p.a.x);
    CHECK(sep <= 2.0 + 1e-12);
    max_sep = std::max(max_sep, sep);
  }
  CHECK(max_sep > 1.9);
  const auto again = random_point_pairs(500, 3, 2.0, 0.3);
  CHECK(again.back().b.x == pairs.back().b.x);
  CHECK(random_point_pairs(1, 4)[0].a.x != pairs[0].a.x);
}

TEST_CASE("expected cross trace") {
  const SpectrumModel m(0.0);
  LocalFrame frame;
  PointPair same{{{0.3, -0.2, 0.1}, 0.2}, {{0.3, -0.2, 0.1}, 0.2}};
  CHECK(expected_cross_trace(same, m, frame) == doctest::Approx(2.0).epsilon(1e-9));

  // Pure time lag: spatial part at zero separation, Gaussian decay in time.
  PointPair lagged{{{0, 0, 0}, 0.0}, {{0, 0, 0}, frame.t_T}};
  CHECK(expected_cross_trace(lagged, m, frame) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-9));

  // A mean flow advects the pattern: b sits where a's fluid moved to.
  frame.mean_velocity = {2.0, 0.0, 0.0};
  PointPair advected{{{0, 0, 0}, 0.0}, {{0.2, 0, 0}, 0.1}};
  CHECK(expected_cross_trace(advected, m, frame) == doctest::Approx(2.0 * std::exp(-0.5 * (0.1 / 0.212) * (0.1 / 0.212))).epsilon(1e-9));
}

TEST_CASE("covariance check on a few pairs") {
  auto pairs = random_point_pairs(3, 8);
  pairs.push_back({{{0.1, 0.1, 0.1}, 0.0}, {{0.1, 0.1, 0.1}, 0.0}});
  CovarianceCheckConfig cfg;
  cfg.samples = 4000;
  cfg.seed = 21;
  const auto checks = covariance_check(pairs, cfg);
  REQUIRE(checks.size() == 4);
  for (const auto& c : checks) {
    CAPTURE(c.z_score);
    CHECK(std::abs(c.z_score) < 4.0);
    CHECK(c.estimate.samples == 4000);
  }
  CHECK(checks[3].expected_trace == doctest::Approx(2.0).epsilon(1e-9));

  cfg.threads = 2;
  const auto parallel = covariance_check(pairs, cfg);
  for (std::size_t k = 0; k < 4; ++k) CHECK(parallel[k].estimate.value == checks[k].estimate.value);

  cfg.samples = 1;
  CHECK_THROWS_AS(covariance_check(pairs, cfg), DomainError);
}

}  // TEST_SUITE
