#include "meltblow/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string level_label(double height) { return std::isnan(height) ? "T" : "z=" + format_number(height); }

HeightResult collect(double height, const std::vector<ReplicationOutcome>& reps, std::size_t slot,
                     const ReplicationOutcome& baseline, const MonteCarloOptions& opt) {
  const bool terminal = std::isnan(height);
  HeightResult h;
  h.height = height;
  for (const auto& r : reps) {
    if (!r.ok) continue;
    const double e = terminal ? r.terminal_e : r.crossing_e[slot];
    if (std::isnan(e))
      ++h.missing;
    else
      h.samples.push_back(e);
  }
  h.summary = summarize(h.samples);
  h.histogram = make_histogram(h.samples, opt.histogram_bins);
  h.density = kernel_density(h.samples, opt.density_points);
  h.baseline = !baseline.ok ? kNaN : terminal ? baseline.terminal_e : baseline.crossing_e[slot];
  return h;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ParameterSet replication_parameters(const MonteCarloOptions& options, std::size_t index) {
  static const SpectrumModel zero_zeta(0.0);
  return ParameterSet::draw(options.modes, zero_zeta, options.seed, index);
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return kNaN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SampleSummary summarize(std::vector<double> values) {
  SampleSummary s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.sd = s.min = s.max = s.q05 = s.q25 = s.median = s.q75 = s.q95 = kNaN;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q05 = sorted_quantile(values, 0.05);
  s.q25 = sorted_quantile(values, 0.25);
  s.median = sorted_quantile(values, 0.5);
  s.q75 = sorted_quantile(values, 0.75);
  s.q95 = sorted_quantile(values, 0.95);
  return s;
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lower = *mn;
  h.width = *mx > *mn ? (*mx - *mn) / static_cast<double>(bins) : 1.0;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - h.lower) / h.width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

DensityEstimate kernel_density(const std::vector<double>& values, std::size_t points) {
  DensityEstimate d;
  if (values.size() < 2 || points < 2) return d;
  const SampleSummary s = summarize(values);
  const double spread = std::min(s.sd, (s.q75 - s.q25) / 1.34);
  d.bandwidth = 0.9 * (spread > 0.0 ? spread : s.sd) * std::pow(static_cast<double>(values.size()), -0.2);
  if (!(d.bandwidth > 0.0)) return d;
  const double lo = s.min - 3.0 * d.bandwidth, hi = s.max + 3.0 * d.bandwidth;
  const double norm = 1.0 / (static_cast<double>(values.size()) * d.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  d.grid.resize(points);
  d.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    double sum = 0.0;
    for (double v : values) {
      const double u = (x - v) / d.bandwidth;
      sum += std::exp(-0.5 * u * u);
    }
    d.grid[i] = x;
    d.density[i] = sum * norm;
  }
  return d;
}

ReplicationOutcome run_replication(const FiberParams& fp, const FlowSource& flow, const DragClosure& closure,
                                   const ParameterSet* ps, const MonteCarloOptions& opt) {
  ReplicationOutcome out;
  out.crossing_e.assign(opt.heights.size(), kNaN);
  TrajectorySetup setup;
  setup.flow = &flow;
  setup.parameters = ps;
  setup.closure = &closure;
  setup.zeta_mode = opt.zeta_mode;
  setup.temporal = opt.temporal;

  bool have_prev = false;
  double z_prev = 0.0, e_prev = 0.0;
  TrajectoryPoint last;
  auto observer = [&](const TrajectoryPoint& p) {
    const double z = p.state.r.z;
    if (p.dt > 0.0) ++out.steps;
    if (have_prev) {
      for (std::size_t k = 0; k < opt.heights.size(); ++k) {
        const double h = opt.heights[k];
        if (!std::isnan(out.crossing_e[k]) || (z_prev - h) * (z - h) > 0.0 || z == z_prev) continue;
        out.crossing_e[k] = e_prev + (p.state.e - e_prev) * (h - z_prev) / (z - z_prev);
      }
    }
    have_prev = true;
    z_prev = z;
    e_prev = p.state.e;
    last = p;
  };
  try {
    const TrajectoryRecord rec = integrate_observed(fp, setup, opt.integrator, observer);
    out.ok = true;
    out.termination = rec.termination;
    out.terminal_r = last.state.r;
    out.terminal_t = last.t;
    out.terminal_e = rec.termination == Termination::Horizon ? last.state.e : kNaN;
    if (rec.termination == Termination::DomainExit) out.error = rec.message;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

MonteCarloResult monte_carlo_elongation(const FiberParams& fp, const FlowSource& flow, const DragClosure& closure,
                                        const MonteCarloOptions& opt) {
  if (opt.samples == 0) throw DomainError("Monte Carlo: at least one sample is required");
  fp.validate();
  MonteCarloResult res;
  res.replications.resize(opt.samples);
  res.baseline = run_replication(fp, flow, closure, nullptr, opt);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < opt.samples;) {
      if (opt.fluctuations) {
        const ParameterSet ps = replication_parameters(opt, i);
        res.replications[i] = run_replication(fp, flow, closure, &ps, opt);
      } else {
        res.replications[i] = run_replication(fp, flow, closure, nullptr, opt);
      }
      if (opt.progress) {
        std::lock_guard lock(progress_mutex);
        opt.progress(++done, opt.samples);
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(opt.samples)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& r : res.replications) res.failures += r.ok ? 0 : 1;
  res.failure_fraction = static_cast<double>(res.failures) / static_cast<double>(opt.samples);
  for (std::size_t k = 0; k < opt.heights.size(); ++k)
    res.heights.push_back(collect(opt.heights[k], res.replications, k, res.baseline, opt));
  res.terminal = collect(kNaN, res.replications, 0, res.baseline, opt);
  return res;
}

void write_montecarlo_json(const MonteCarloResult& result, std::ostream& out, const std::string& config) {
  using json = nlohmann::ordered_json;
  json j;
  j["config"] = config;
  j["samples"] = result.replications.size();
  j["failures"] = result.failures;
  j["failure_fraction"] = result.failure_fraction;
  json levels = json::array();
  auto level = [&](const HeightResult& h) {
    json l;
    l["level"] = level_label(h.height);
    l["height"] = number_or_null(h.height);
    l["count"] = h.summary.count;
    l["missing"] = h.missing;
    l["baseline"] = number_or_null(h.baseline);
    l["mean"] = number_or_null(h.summary.mean);
    l["sd"] = number_or_null(h.summary.sd);
    l["min"] = number_or_null(h.summary.min);
    l["q05"] = number_or_null(h.summary.q05);
    l["q25"] = number_or_null(h.summary.q25);
    l["median"] = number_or_null(h.summary.median);
    l["q75"] = number_or_null(h.summary.q75);
    l["q95"] = number_or_null(h.summary.q95);
    l["max"] = number_or_null(h.summary.max);
    l["bandwidth"] = h.density.bandwidth;
    l["samples"] = h.samples;
    levels.push_back(std::move(l));
  };
  for (const auto& h : result.heights) level(h);
  level(result.terminal);
  j["levels"] = std::move(levels);
  json failed = json::array();
  for (std::size_t i = 0; i < result.replications.size(); ++i)
    if (!result.replications[i].ok) failed.push_back({{"index", i}, {"error", result.replications[i].error}});
  j["failed"] = std::move(failed);
  out << j.dump(2) << '\n';
}

void write_density_csv(const MonteCarloResult& result, std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "level,kind,x,value\n";
  auto emit = [&](const HeightResult& h) {
    const std::string label = level_label(h.height);
    for (std::size_t i = 0; i < h.density.grid.size(); ++i)
      out << label << ",density," << format_number(h.density.grid[i]) << ',' << format_number(h.density.density[i])
          << '\n';
    for (std::size_t i = 0; i < h.histogram.counts.size(); ++i)
      out << label << ",histogram," << format_number(h.histogram.lower + (static_cast<double>(i) + 0.5) * h.histogram.width)
          << ',' << h.histogram.counts[i] << '\n';
  };
  for (const auto& h : result.heights) emit(h);
  emit(result.terminal);
}

void write_samples_csv(const MonteCarloResult& result, std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "index,status";
  for (const auto& h : result.heights) out << ",e_at_" << format_number(h.height);
  out << ",e_T,z_T\n";
  for (std::size_t i = 0; i < result.replications.size(); ++i) {
    const auto& r = result.replications[i];
    out << i << ',' << (r.ok ? to_string(r.termination) : "failed");
    for (double e : r.crossing_e) out << ',' << format_number(e);
    out << ',' << format_number(r.ok ? r.terminal_e : kNaN) << ',' << format_number(r.ok ? r.terminal_r.z : kNaN)
        << '\n';
  }
}

}  // namespace meltblow
