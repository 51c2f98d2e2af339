#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "meltblow/fieldsampler.hpp"
#include "meltblow/stats.hpp"

namespace meltblow {

struct PointPair {
  SpaceTimePoint a;
  SpaceTimePoint b;
};

/// `count` pairs with a uniform in [-1,1]^3 x [0,0.5], b at distance
/// U(0, max_separation) in a uniform direction and time lag U(0, max_lag).
std::vector<PointPair> random_point_pairs(std::size_t count, std::uint64_t seed, double max_separation = 2.0,
                                          double max_lag = 0.3);

/// tr E[u'(a) u'(b)^T] = tr gamma(d) phi(t_a - t_b), d = (x_a - u t_a) - (x_b - u t_b).
double expected_cross_trace(const PointPair& pair, const SpectrumModel& model, const LocalFrame& frame);

struct CovarianceCheckConfig {
  std::size_t modes = ParameterSet::kDefaultModes;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  LocalFrame frame{};
  unsigned threads = 1;
};

struct CovarianceCheck {
  PointPair pair;
  double expected_trace = 0.0;
  CovarianceEstimate estimate;
  /// (estimate.trace - expected_trace) / estimate.trace_standard_error
  double z_score = 0.0;
};

/// Empirical cross-covariances of eval_local_fluctuation over `samples`
/// parameter sets (sample s uses stream s), one entry per pair.
std::vector<CovarianceCheck> covariance_check(const std::vector<PointPair>& pairs, const CovarianceCheckConfig& cfg);

}  // namespace meltblow
