#include "meltblow/validation.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "meltblow/errors.hpp"

namespace meltblow {

std::vector<PointPair> random_point_pairs(std::size_t count, std::uint64_t seed, double max_separation,
                                          double max_lag) {
  RandomStream rng(seed, 0);
  std::vector<PointPair> pairs(count);
  for (auto& p : pairs) {
    for (int i = 0; i < 3; ++i) p.a.x[i] = 2.0 * rng.uniform() - 1.0;
    p.a.t = 0.5 * rng.uniform();
    const Vec3 dir = sample_sphere(rng);
    p.b.x = p.a.x + dir * (max_separation * rng.uniform());
    p.b.t = p.a.t + max_lag * rng.uniform();
  }
  return pairs;
}

double expected_cross_trace(const PointPair& pair, const SpectrumModel& model, const LocalFrame& frame) {
  const Vec3 d = (pair.a.x - frame.mean_velocity * pair.a.t) - (pair.b.x - frame.mean_velocity * pair.b.t);
  return correlation_trace(norm(d), model) * temporal_correlation(std::abs(pair.a.t - pair.b.t), {frame.t_T});
}

std::vector<CovarianceCheck> covariance_check(const std::vector<PointPair>& pairs, const CovarianceCheckConfig& cfg) {
  if (cfg.samples < 2) throw DomainError("covariance check: at least 2 samples are required");
  const SpectrumModel model(cfg.frame.zeta);
  const std::size_t m = pairs.size();
  std::vector<Vec3> ua(m * cfg.samples), ub(m * cfg.samples);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s; (s = next.fetch_add(1)) < cfg.samples;) {
      const auto ps = ParameterSet::draw(cfg.modes, model, cfg.seed, s);
      for (std::size_t k = 0; k < m; ++k) {
        ua[k * cfg.samples + s] = eval_local_fluctuation(pairs[k].a.x, pairs[k].a.t, ps, cfg.frame);
        ub[k * cfg.samples + s] = eval_local_fluctuation(pairs[k].b.x, pairs[k].b.t, ps, cfg.frame);
      }
    }
  };
  const unsigned nt = std::max(1u, cfg.threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<CovarianceCheck> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    out[k].pair = pairs[k];
    out[k].expected_trace = expected_cross_trace(pairs[k], model, cfg.frame);
    out[k].estimate = empirical_covariance(std::span<const Vec3>(ua).subspan(k * cfg.samples, cfg.samples),
                                           std::span<const Vec3>(ub).subspan(k * cfg.samples, cfg.samples));
    out[k].z_score = (out[k].estimate.trace - out[k].expected_trace) / out[k].estimate.trace_standard_error;
  }
  return out;
}

}  // namespace meltblow
