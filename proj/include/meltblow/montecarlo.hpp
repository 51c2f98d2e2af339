#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "meltblow/jetdynamics.hpp"

namespace meltblow {

struct MonteCarloOptions {
  std::size_t samples = 5000;
  std::vector<double> heights{-0.033, -0.066, -0.1};  // z levels [m]
  std::uint64_t seed = 0;
  std::size_t modes = ParameterSet::kDefaultModes;
  ZetaMode zeta_mode = ZetaMode::Zero;
  bool fluctuations = true;
  unsigned threads = 1;
  IntegratorOptions integrator{};
  TemporalModel temporal{};
  std::size_t histogram_bins = 40;
  std::size_t density_points = 256;
  /// Called after each finished replication (serialized). Optional.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Parameter set of replication i: stream i of `seed`, drawn for zeta = 0.
ParameterSet replication_parameters(const MonteCarloOptions& options, std::size_t index);

struct ReplicationOutcome {
  bool ok = false;
  std::string error;                 // set when !ok
  std::vector<double> crossing_e;    // per height; NaN when not reached
  double terminal_e = 0.0;           // e at T; NaN after a domain exit
  Vec3 terminal_r{};
  double terminal_t = 0.0;
  Termination termination = Termination::Horizon;
  std::size_t steps = 0;
};

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
  double q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0;
};

/// Linear-interpolation quantile (type 7) of an ascending sample.
double sorted_quantile(const std::vector<double>& sorted, double q);
SampleSummary summarize(std::vector<double> values);

struct Histogram {
  double lower = 0.0;
  double width = 0.0;
  std::vector<std::size_t> counts;
};
Histogram make_histogram(const std::vector<double>& values, std::size_t bins);

/// Gaussian kernel density estimate with Silverman's bandwidth.
struct DensityEstimate {
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> density;
};
DensityEstimate kernel_density(const std::vector<double>& values, std::size_t points);

struct HeightResult {
  double height = 0.0;             // NaN for the terminal level (t = T)
  std::vector<double> samples;     // replication order, missing ones skipped
  std::size_t missing = 0;         // ok replications that never got there
  SampleSummary summary;
  Histogram histogram;
  DensityEstimate density;
  double baseline = 0.0;           // fluctuation-free value; NaN if not reached
};

struct MonteCarloResult {
  std::vector<ReplicationOutcome> replications;
  std::vector<HeightResult> heights;
  HeightResult terminal;
  ReplicationOutcome baseline;
  std::size_t failures = 0;
  double failure_fraction = 0.0;
};

/// One trajectory with crossing detection; `ps` null for the baseline.
ReplicationOutcome run_replication(const FiberParams& fp, const FlowSource& flow, const DragClosure& closure,
                                   const ParameterSet* ps, const MonteCarloOptions& options);

/// Runs `samples` independent replications (replication i always uses
/// stream i) plus the fluctuation-free baseline. Per-replication numerical
/// failures are recorded, not thrown. Results do not depend on `threads`.
MonteCarloResult monte_carlo_elongation(const FiberParams& fp, const FlowSource& flow, const DragClosure& closure,
                                        const MonteCarloOptions& options);

/// Summary with per-height sample arrays and quantiles. `config` is embedded verbatim.
void write_montecarlo_json(const MonteCarloResult& result, std::ostream& out, const std::string& config = {});
/// Long format: level,kind,x,value with kind in {density, histogram}.
void write_density_csv(const MonteCarloResult& result, std::ostream& out,
                       const std::vector<std::string>& preamble = {});
/// One row per replication: index,status,e_at_<h>...,e_T,z_T.
void write_samples_csv(const MonteCarloResult& result, std::ostream& out,
                       const std::vector<std::string>& preamble = {});

}  // namespace meltblow
