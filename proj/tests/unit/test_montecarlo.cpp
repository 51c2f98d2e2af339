#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meltblow/errors.hpp"
#include "meltblow/montecarlo.hpp"
#include "meltblow/rng.hpp"

using namespace meltblow;

TEST_SUITE("montecarlo") {

// Reference values from numpy.quantile (default linear method) and numpy.std(ddof=1).
TEST_CASE("summary statistics") {
  const auto s = summarize({3, 1, 4, 1, 5, 9, 2, 6});
  CHECK(s.count == 8);
  CHECK(s.mean == doctest::Approx(3.875).epsilon(1e-15));
  CHECK(s.sd == doctest::Approx(2.748376143938713).epsilon(1e-14));
  CHECK(s.min == 1.0);
  CHECK(s.max == 9.0);
  CHECK(s.q05 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.q25 == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(s.median == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(s.q75 == doctest::Approx(5.25).epsilon(1e-15));
  CHECK(s.q95 == doctest::Approx(7.95).epsilon(1e-14));
  CHECK(std::isnan(summarize({}).median));
  CHECK(summarize({2.5}).sd == 0.0);
  CHECK(std::isnan(sorted_quantile({}, 0.5)));
}

TEST_CASE("histogram counts every value once") {
  const std::vector<double> v{0.0, 0.1, 0.5, 0.99, 1.0, 1.0};
  const auto h = make_histogram(v, 4);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.lower == 0.0);
  CHECK(h.width == doctest::Approx(0.25));
  CHECK(h.counts == std::vector<std::size_t>{2, 0, 1, 3});
  const auto flat = make_histogram({7.0, 7.0}, 3);
  CHECK(flat.counts[0] == 2);
  CHECK(make_histogram({}, 3).counts.empty());
}

TEST_CASE("kernel density integrates to one") {
  RandomStream rng(3, 0);
  std::vector<double> v(2000);
  for (auto& x : v) x = std::exp(rng.normal());
  const auto d = kernel_density(v, 512);
  REQUIRE(d.grid.size() == 512);
  CHECK(d.bandwidth > 0.0);
  double mass = 0.0;
  bool nonnegative = true;
  for (std::size_t i = 1; i < d.grid.size(); ++i) {
    mass += 0.5 * (d.density[i] + d.density[i - 1]) * (d.grid[i] - d.grid[i - 1]);
    nonnegative = nonnegative && d.density[i] >= 0.0;
  }
  CHECK(nonnegative);
  // The grid stops three bandwidths past the extremes.
  CHECK(mass > 0.995);
  CHECK(mass < 1.0 + 1e-6);
  CHECK(kernel_density({1.0}, 10).grid.empty());
}

TEST_CASE("crossing values interpolate the trajectory linearly in z") {
  const SyntheticPlanarJet jet;
  const QuadraticDrag drag;
  const FiberParams fp;
  MonteCarloOptions opt;
  opt.heights = {-0.02, -0.05};
  const auto out = run_replication(fp, jet, drag, nullptr, opt);
  REQUIRE(out.ok);
  const auto rec = integrate_trajectory(fp, jet, nullptr, drag, opt.integrator);
  CHECK(out.terminal_e == rec.last().state.e);
  CHECK(out.steps == rec.steps.size());
  std::vector<TrajectoryPoint> pts{rec.initial};
  pts.insert(pts.end(), rec.steps.begin(), rec.steps.end());
  for (std::size_t k = 0; k < opt.heights.size(); ++k) {
    const double h = opt.heights[k];
    double expected = std::nan("");
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double z0 = pts[i - 1].state.r.z, z1 = pts[i].state.r.z;
      if ((z0 - h) * (z1 - h) <= 0.0 && z0 != z1) {
        expected = pts[i - 1].state.e + (pts[i].state.e - pts[i - 1].state.e) * (h - z0) / (z1 - z0);
        break;
      }
    }
    REQUIRE(!std::isnan(expected));
    CHECK(out.crossing_e[k] == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(out.crossing_e[0] < out.crossing_e[1]);
}

TEST_CASE("a single replication reproduces a direct integration") {
  const SyntheticPlanarJet jet;
  const QuadraticDrag drag;
  FiberParams fp;
  fp.horizon = 3e-4;
  MonteCarloOptions opt;
  opt.samples = 1;
  opt.seed = 77;
  const auto res = monte_carlo_elongation(fp, jet, drag, opt);
  const auto ps = ParameterSet::draw(opt.modes, SpectrumModel(0.0), 77, 0);
  CHECK(replication_parameters(opt, 0) == ps);
  const auto rec = integrate_trajectory(fp, jet, &ps, drag);
  REQUIRE(res.replications.size() == 1);
  CHECK(res.replications[0].terminal_e == rec.last().state.e);
  CHECK(res.terminal.samples == std::vector<double>{rec.last().state.e});
}

TEST_CASE("results do not depend on the thread count") {
  const SyntheticPlanarJet jet;
  const QuadraticDrag drag;
  FiberParams fp;
  fp.horizon = 2e-4;
  MonteCarloOptions opt;
  opt.samples = 6;
  opt.seed = 11;
  opt.heights = {-0.01};
  std::size_t calls = 0;
  opt.progress = [&](std::size_t done, std::size_t total) {
    ++calls;
    CHECK(done <= total);
  };
  const auto one = monte_carlo_elongation(fp, jet, drag, opt);
  CHECK(calls == 6);
  opt.threads = 3;
  const auto three = monte_carlo_elongation(fp, jet, drag, opt);
  std::ostringstream a, b;
  write_montecarlo_json(one, a, "seed=11");
  write_montecarlo_json(three, b, "seed=11");
  CHECK(a.str() == b.str());
  std::ostringstream sa, sb;
  write_samples_csv(one, sa);
  write_samples_csv(three, sb);
  CHECK(sa.str() == sb.str());

  // Different replications see different fields.
  CHECK(one.replications[0].terminal_e != one.replications[1].terminal_e);
  CHECK(one.failures == 0);
  CHECK(one.terminal.summary.count == 6);
  CHECK(one.terminal.baseline == one.baseline.terminal_e);

  const auto j = nlohmann::json::parse(a.str());
  CHECK(j.is_object());
}

TEST_CASE("switching fluctuations off gives the baseline for every replication") {
  const SyntheticPlanarJet jet;
  const QuadraticDrag drag;
  FiberParams fp;
  fp.horizon = 2e-4;
  MonteCarloOptions opt;
  opt.samples = 2;
  opt.fluctuations = false;
  const auto res = monte_carlo_elongation(fp, jet, drag, opt);
  for (const auto& r : res.replications) CHECK(r.terminal_e == res.baseline.terminal_e);
}

TEST_CASE("numerical failures are recorded, not thrown") {
  const SyntheticPlanarJet jet;
  const QuadraticDrag drag;
  FiberParams fp;
  fp.horizon = 2e-4;
  MonteCarloOptions opt;
  opt.samples = 2;
  opt.integrator.dt_min = 1e-4;
  MonteCarloResult res;
  CHECK_NOTHROW(res = monte_carlo_elongation(fp, jet, drag, opt));
  CHECK(res.failures == 2);
  CHECK(res.failure_fraction == 1.0);
  CHECK(!res.replications[0].error.empty());
  CHECK(res.terminal.samples.empty());
  opt.samples = 0;
  CHECK_THROWS_AS(monte_carlo_elongation(fp, jet, drag, opt), DomainError);
}

}  // TEST_SUITE
