#include "meltblow/meltblow.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <stdexcept>
#include <string>

#include "meltblow/errors.hpp"
#include "meltblow/fieldsampler.hpp"
#include "meltblow/flowfield.hpp"
#include "meltblow/jetdynamics.hpp"
#include "meltblow/montecarlo.hpp"
#include "meltblow/spectrum.hpp"
#include "meltblow/stats.hpp"
#include "meltblow/validation.hpp"

using namespace meltblow;

struct mb_spectrum {
  SpectrumModel model;
};
struct mb_params {
  ParameterSet ps;
};
struct mb_flow {
  std::unique_ptr<FlowSource> source;
};
struct mb_trajectory {
  TrajectoryRecord record;
};
struct mb_montecarlo {
  MonteCarloResult result;
};

namespace {

thread_local std::string last_error;

mb_status fail(mb_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Runs f, mapping library exceptions onto status codes.
template <class F>
mb_status guarded(F&& f) {
  try {
    f();
    return MB_OK;
  } catch (const DomainExit& e) {
    return fail(MB_ERR_DOMAIN_EXIT, e.what());
  } catch (const ParseError& e) {
    return fail(MB_ERR_PARSE, e.what());
  } catch (const ValidationError& e) {
    return fail(MB_ERR_VALIDATION, e.what());
  } catch (const NumericalError& e) {
    return fail(MB_ERR_NUMERICAL, e.what());
  } catch (const DomainError& e) {
    return fail(MB_ERR_DOMAIN, e.what());
  } catch (const IoError& e) {
    return fail(MB_ERR_IO, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(MB_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MB_ERR_INTERNAL, e.what());
  }
}

#define MB_REQUIRE(cond)                                                                \
  do {                                                                                  \
    if (!(cond)) return fail(MB_ERR_INVALID_ARGUMENT, "invalid argument: " #cond);      \
  } while (0)

Vec3 vec(const double v[3]) { return {v[0], v[1], v[2]}; }
void put(const Vec3& v, double out[3]) {
  out[0] = v.x;
  out[1] = v.y;
  out[2] = v.z;
}

std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> lines;
  if (!text) return lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::ofstream open_output(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(std::string("cannot open ") + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) throw IoError(std::string("write to ") + path + " failed");
}

FiberParams fiber_params(const mb_sim_config& c) {
  FiberParams fp;
  fp.v0 = c.v0;
  fp.d0 = c.d0;
  fp.rho_fiber = c.rho_fiber;
  fp.r0 = vec(c.r0);
  fp.tau0 = vec(c.tau0);
  fp.horizon = c.horizon;
  fp.validate();
  return fp;
}

IntegratorOptions integrator_options(const mb_sim_config& c) {
  IntegratorOptions o;
  o.rtol = c.rtol;
  o.atol = c.atol;
  o.dt_min = c.dt_min;
  o.dt_initial = c.dt_initial;
  o.max_steps = static_cast<std::size_t>(c.max_steps);
  if (!(o.rtol > 0.0) || !(o.atol > 0.0) || !(o.dt_min > 0.0) || !(o.dt_initial >= 0.0) || o.max_steps == 0)
    throw ValidationError("integrator: tolerances, dt_min and max_steps must be positive");
  return o;
}

ZetaMode zeta_mode(int m) {
  if (m != MB_ZETA_ZERO && m != MB_ZETA_FULL) throw std::invalid_argument("zeta mode must be MB_ZETA_ZERO or MB_ZETA_FULL");
  return m == MB_ZETA_ZERO ? ZetaMode::Zero : ZetaMode::Full;
}

RoystonVariant royston_variant(int v) {
  if (v != MB_ROYSTON_SHAPIRO_WILK && v != MB_ROYSTON_MATLAB) throw std::invalid_argument("unknown Royston variant");
  return v == MB_ROYSTON_MATLAB ? RoystonVariant::Matlab : RoystonVariant::ShapiroWilk;
}

void fill(const HeightResult& h, mb_level_summary* out) {
  out->height = h.height;
  out->count = h.summary.count;
  out->missing = h.missing;
  out->baseline = h.baseline;
  out->mean = h.summary.mean;
  out->sd = h.summary.sd;
  out->min = h.summary.min;
  out->q05 = h.summary.q05;
  out->q25 = h.summary.q25;
  out->median = h.summary.median;
  out->q75 = h.summary.q75;
  out->q95 = h.summary.q95;
  out->max = h.summary.max;
}

RejectionExperimentConfig rejection_config(const mb_rejection_config& c) {
  RejectionExperimentConfig r;
  r.modes.assign(c.modes, c.modes + c.n_modes);
  r.variates.assign(c.variates, c.variates + c.n_variates);
  for (std::size_t n : r.modes)
    if (n == 0) throw DomainError("rejection experiment: N must be positive");
  for (std::size_t d : r.variates)
    if (d == 0) throw DomainError("rejection experiment: d must be positive");
  r.replications = c.replications;
  r.sample_size = c.sample_size;
  r.alpha = c.alpha;
  r.component = c.component;
  r.spacing = c.spacing;
  r.time_step = c.time_step;
  r.variant = royston_variant(c.variant);
  r.seed = c.seed;
  r.threads = c.threads;
  return r;
}

}  // namespace

extern "C" {

const char* mb_last_error(void) { return last_error.c_str(); }

const char* mb_version(void) { return "0.1.0"; }

const char* mb_status_name(mb_status s) {
  switch (s) {
    case MB_OK: return "ok";
    case MB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MB_ERR_DOMAIN: return "domain error";
    case MB_ERR_NUMERICAL: return "numerical error";
    case MB_ERR_VALIDATION: return "validation error";
    case MB_ERR_PARSE: return "parse error";
    case MB_ERR_IO: return "i/o error";
    case MB_ERR_DOMAIN_EXIT: return "domain exit";
    case MB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

double mb_critical_zeta(void) { return critical_zeta(reduced_coefficients()); }

mb_status mb_spectrum_create(double zeta, mb_spectrum** out) {
  MB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mb_spectrum{SpectrumModel(zeta)}; });
}

void mb_spectrum_destroy(mb_spectrum* s) { delete s; }

mb_status mb_spectrum_info_get(const mb_spectrum* s, mb_spectrum_info* out) {
  MB_REQUIRE(s && out);
  return guarded([&] {
    const auto& m = s->model;
    out->zeta = m.zeta();
    out->kappa1 = m.kappa1();
    out->kappa2 = m.kappa2().value_or(std::numeric_limits<double>::infinity());
    out->residual1 = m.solution().residual1;
    out->residual2 = m.solution().residual2;
    out->iterations = m.solution().iterations;
    const auto masses = m.branch_masses();
    for (int i = 0; i < 3; ++i) out->masses[i] = masses[i];
    out->second_moment = m.second_moment();
  });
}

mb_status mb_spectrum_energy(const mb_spectrum* s, double kappa, double* out) {
  MB_REQUIRE(s && out);
  return guarded([&] { *out = s->model.energy(kappa); });
}

mb_status mb_spectrum_cumulative(const mb_spectrum* s, double kappa, double* out) {
  MB_REQUIRE(s && out);
  return guarded([&] { *out = s->model.cumulative_energy(kappa); });
}

mb_status mb_spectrum_quantile(const mb_spectrum* s, double u, double* out) {
  MB_REQUIRE(s && out);
  return guarded([&] { *out = s->model.quantile(u); });
}

mb_status mb_correlation_trace(const mb_spectrum* s, double r, double* out) {
  MB_REQUIRE(s && out);
  return guarded([&] { *out = correlation_trace(r, s->model); });
}

mb_status mb_temporal_correlation(double t, double t_T, double* out) {
  MB_REQUIRE(out);
  return guarded([&] {
    if (!(t_T > 0.0)) throw DomainError("t_T must be positive");
    *out = temporal_correlation(t, TemporalModel{t_T});
  });
}

mb_status mb_params_draw(const mb_spectrum* s, size_t modes, uint64_t seed, uint64_t stream, int branch,
                         mb_params** out) {
  MB_REQUIRE(s && out);
  MB_REQUIRE(branch == MB_BRANCH_REAL || branch == MB_BRANCH_IMAG);
  *out = nullptr;
  return guarded([&] {
    *out = new mb_params{ParameterSet::draw(modes, s->model, seed, stream,
                                            branch == MB_BRANCH_REAL ? Branch::Real : Branch::Imag)};
  });
}

void mb_params_destroy(mb_params* p) { delete p; }

size_t mb_params_modes(const mb_params* p) { return p ? p->ps.size() : 0; }

mb_status mb_local_fluctuation(const mb_params* p, const double x[3], double t, const double mean_velocity[3],
                               double t_T, double out[3]) {
  MB_REQUIRE(p && x && mean_velocity && out);
  return guarded([&] {
    if (!(t_T > 0.0)) throw DomainError("t_T must be positive");
    LocalFrame frame{p->ps.zeta(), vec(mean_velocity), t_T};
    put(eval_local_fluctuation(vec(x), t, p->ps, frame), out);
  });
}

void mb_jet_params_default(mb_jet_params* out) {
  if (!out) return;
  const SyntheticJetParams d;
  *out = {d.inlet_speed, d.inlet_k,    d.inlet_eps,  d.slot_half_width, d.virtual_origin,
          d.spreading_rate, d.speed_decay, d.k_decay, d.eps_decay,     d.ambient_fraction,
          d.nu,          d.rho,        d.y_half_extent, d.z_min,       d.z_max};
}

mb_status mb_flow_create_synthetic(const mb_jet_params* p, mb_flow** out) {
  MB_REQUIRE(p && out);
  *out = nullptr;
  return guarded([&] {
    SyntheticJetParams jp;
    jp.inlet_speed = p->inlet_speed;
    jp.inlet_k = p->inlet_k;
    jp.inlet_eps = p->inlet_eps;
    jp.slot_half_width = p->slot_half_width;
    jp.virtual_origin = p->virtual_origin;
    jp.spreading_rate = p->spreading_rate;
    jp.speed_decay = p->speed_decay;
    jp.k_decay = p->k_decay;
    jp.eps_decay = p->eps_decay;
    jp.ambient_fraction = p->ambient_fraction;
    jp.nu = p->nu;
    jp.rho = p->rho;
    jp.y_half_extent = p->y_half_extent;
    jp.z_min = p->z_min;
    jp.z_max = p->z_max;
    *out = new mb_flow{std::make_unique<SyntheticPlanarJet>(jp)};
  });
}

mb_status mb_flow_load_csv(const char* csv_path, const char* sidecar_path, mb_flow** out) {
  MB_REQUIRE(csv_path && out);
  *out = nullptr;
  return guarded([&] {
    auto grid = load_flow_csv(csv_path, sidecar_path ? std::filesystem::path(sidecar_path) : std::filesystem::path{});
    *out = new mb_flow{std::make_unique<FlowFieldGrid>(std::move(grid))};
  });
}

void mb_flow_destroy(mb_flow* f) { delete f; }

mb_status mb_flow_describe(const mb_flow* f, char* buffer, size_t size) {
  MB_REQUIRE(f && buffer && size > 0);
  return guarded([&] {
    const std::string d = f->source->describe();
    const std::size_t n = std::min(d.size(), size - 1);
    std::memcpy(buffer, d.data(), n);
    buffer[n] = '\0';
  });
}

mb_status mb_flow_sample_at(const mb_flow* f, const double x[3], double t, mb_flow_sample* out) {
  MB_REQUIRE(f && x && out);
  return guarded([&] {
    const FlowSample s = f->source->sample(vec(x), t);
    put(s.mean_velocity, out->mean_velocity);
    out->k = s.k;
    out->eps = s.eps;
    out->nu = s.nu;
    out->rho = s.rho;
  });
}

mb_status mb_flow_export(const mb_flow* f, const double* y, size_t ny, const double* z, size_t nz,
                         const char* csv_path, const char* sidecar_path) {
  MB_REQUIRE(f && y && z && csv_path);
  return guarded([&] {
    const FlowFieldGrid grid = rasterize(*f->source, std::vector<double>(y, y + ny), std::vector<double>(z, z + nz));
    write_flow_csv(grid, csv_path, sidecar_path ? std::filesystem::path(sidecar_path) : std::filesystem::path{});
  });
}

mb_status mb_global_fluctuation(const mb_flow* f, const mb_params* p, int mode, const double x[3], double t,
                                double out[3]) {
  MB_REQUIRE(f && p && x && out);
  return guarded([&] { put(eval_global_fluctuation(vec(x), t, *f->source, p->ps, zeta_mode(mode)), out); });
}

void mb_sim_config_default(mb_sim_config* out) {
  if (!out) return;
  const FiberParams fp;
  const IntegratorOptions io;
  const QuadraticDrag drag;
  *out = mb_sim_config{};
  out->v0 = fp.v0;
  out->d0 = fp.d0;
  out->rho_fiber = fp.rho_fiber;
  put(fp.r0, out->r0);
  put(fp.tau0, out->tau0);
  out->horizon = fp.horizon;
  out->drag_normal = drag.normal_coefficient();
  out->drag_tangential = drag.tangential_coefficient();
  out->rtol = io.rtol;
  out->atol = io.atol;
  out->dt_min = io.dt_min;
  out->dt_initial = io.dt_initial;
  out->max_steps = io.max_steps;
  out->zeta_mode = MB_ZETA_ZERO;
}

mb_status mb_simulate(const mb_flow* f, const mb_params* p, const mb_sim_config* cfg, mb_trajectory** out) {
  MB_REQUIRE(f && cfg && out);
  *out = nullptr;
  return guarded([&] {
    const FiberParams fp = fiber_params(*cfg);
    const QuadraticDrag drag(cfg->drag_normal, cfg->drag_tangential);
    auto tr = std::make_unique<mb_trajectory>();
    tr->record = integrate_trajectory(fp, *f->source, p ? &p->ps : nullptr, drag, integrator_options(*cfg),
                                      zeta_mode(cfg->zeta_mode));
    *out = tr.release();
  });
}

void mb_trajectory_destroy(mb_trajectory* tr) { delete tr; }

size_t mb_trajectory_size(const mb_trajectory* tr) { return tr ? tr->record.steps.size() + 1 : 0; }

mb_status mb_trajectory_point_get(const mb_trajectory* tr, size_t i, mb_trajectory_point* out) {
  MB_REQUIRE(tr && out);
  if (i > tr->record.steps.size()) return fail(MB_ERR_DOMAIN, "trajectory row index out of range");
  const TrajectoryPoint& p = i == 0 ? tr->record.initial : tr->record.steps[i - 1];
  out->t = p.t;
  put(p.state.r, out->r);
  put(p.state.v, out->v);
  out->e = p.state.e;
  out->dt = p.dt;
  out->t_T = p.t_T;
  out->lT_over_vrel = p.lT_over_vrel;
  put(p.air_velocity, out->u);
  return MB_OK;
}

int mb_trajectory_termination(const mb_trajectory* tr) {
  return tr && tr->record.termination == Termination::DomainExit ? MB_TERMINATION_DOMAIN_EXIT
                                                                 : MB_TERMINATION_HORIZON;
}

size_t mb_trajectory_rejected(const mb_trajectory* tr) { return tr ? tr->record.rejected : 0; }

mb_status mb_trajectory_write_csv(const mb_trajectory* tr, const char* path, const char* preamble) {
  MB_REQUIRE(tr && path);
  return guarded([&] {
    auto out = open_output(path);
    write_trajectory_csv(tr->record, out, split_lines(preamble));
    finish(out, path);
  });
}

void mb_mc_options_default(mb_mc_options* out) {
  if (!out) return;
  static const double heights[] = {-0.033, -0.066, -0.1};
  const MonteCarloOptions d;
  *out = mb_mc_options{};
  out->samples = d.samples;
  out->heights = heights;
  out->n_heights = 3;
  out->seed = d.seed;
  out->modes = d.modes;
  out->fluctuations = d.fluctuations ? 1 : 0;
  out->threads = d.threads;
  out->histogram_bins = d.histogram_bins;
  out->density_points = d.density_points;
}

mb_status mb_montecarlo_run(const mb_flow* f, const mb_sim_config* cfg, const mb_mc_options* opt,
                            mb_progress_fn progress, void* user, mb_montecarlo** out) {
  MB_REQUIRE(f && cfg && opt && out);
  MB_REQUIRE(opt->heights || opt->n_heights == 0);
  *out = nullptr;
  return guarded([&] {
    const FiberParams fp = fiber_params(*cfg);
    const QuadraticDrag drag(cfg->drag_normal, cfg->drag_tangential);
    MonteCarloOptions mo;
    mo.samples = opt->samples;
    mo.heights.assign(opt->heights, opt->heights + opt->n_heights);
    mo.seed = opt->seed;
    mo.modes = opt->modes;
    mo.zeta_mode = zeta_mode(cfg->zeta_mode);
    mo.fluctuations = opt->fluctuations != 0;
    mo.threads = opt->threads;
    mo.integrator = integrator_options(*cfg);
    mo.histogram_bins = opt->histogram_bins;
    mo.density_points = opt->density_points;
    if (progress) mo.progress = [progress, user](std::size_t done, std::size_t total) { progress(done, total, user); };
    auto mc = std::make_unique<mb_montecarlo>();
    mc->result = monte_carlo_elongation(fp, *f->source, drag, mo);
    *out = mc.release();
  });
}

void mb_montecarlo_destroy(mb_montecarlo* mc) { delete mc; }

mb_status mb_montecarlo_level(const mb_montecarlo* mc, size_t level, mb_level_summary* out) {
  MB_REQUIRE(mc && out);
  const auto& heights = mc->result.heights;
  if (level > heights.size()) return fail(MB_ERR_DOMAIN, "Monte Carlo level index out of range");
  fill(level == heights.size() ? mc->result.terminal : heights[level], out);
  return MB_OK;
}

size_t mb_montecarlo_failures(const mb_montecarlo* mc) { return mc ? mc->result.failures : 0; }

mb_status mb_montecarlo_write(const mb_montecarlo* mc, const char* json_path, const char* density_csv,
                              const char* samples_csv, const char* config_text, const char* preamble) {
  MB_REQUIRE(mc);
  return guarded([&] {
    const auto lines = split_lines(preamble);
    if (json_path) {
      auto out = open_output(json_path);
      write_montecarlo_json(mc->result, out, config_text ? config_text : "");
      finish(out, json_path);
    }
    if (density_csv) {
      auto out = open_output(density_csv);
      write_density_csv(mc->result, out, lines);
      finish(out, density_csv);
    }
    if (samples_csv) {
      auto out = open_output(samples_csv);
      write_samples_csv(mc->result, out, lines);
      finish(out, samples_csv);
    }
  });
}

mb_status mb_shapiro_wilk(const double* x, size_t n, double* w, double* p_value) {
  MB_REQUIRE(x && w && p_value);
  return guarded([&] {
    const auto r = shapiro_wilk(std::span<const double>(x, n));
    *w = r.w;
    *p_value = r.p_value;
  });
}

mb_status mb_royston(const double* values, size_t n, size_t d, int variant, mb_normality* out) {
  MB_REQUIRE(values && out);
  return guarded([&] {
    SampleMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) = values[i * d + j];
    const auto r = royston_h(m, royston_variant(variant));
    out->statistic = r.statistic;
    out->p_value = r.p_value;
    out->equivalent_df = r.equivalent_df;
  });
}

mb_status mb_covariance(const double* a, const double* b, size_t n, size_t p, size_t q, double* value, double* se,
                        double* trace, double* trace_se) {
  MB_REQUIRE(a && b);
  return guarded([&] {
    SampleMatrix ma(n, p), mb(n, q);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < p; ++i) ma(k, i) = a[k * p + i];
      for (std::size_t j = 0; j < q; ++j) mb(k, j) = b[k * q + j];
    }
    const auto est = empirical_covariance(ma, mb);
    if (value) std::copy(est.value.begin(), est.value.end(), value);
    if (se) std::copy(est.standard_error.begin(), est.standard_error.end(), se);
    if (trace) *trace = est.trace;
    if (trace_se) *trace_se = est.trace_standard_error;
  });
}

void mb_rejection_config_default(mb_rejection_config* out) {
  if (!out) return;
  static const size_t modes[] = {10, 30, 50, 70, 100, 150};
  static const size_t variates[] = {1, 2, 3, 4, 5, 6};
  const RejectionExperimentConfig d;
  *out = mb_rejection_config{};
  out->modes = modes;
  out->n_modes = 6;
  out->variates = variates;
  out->n_variates = 6;
  out->replications = d.replications;
  out->sample_size = d.sample_size;
  out->alpha = d.alpha;
  out->component = d.component;
  out->spacing = d.spacing;
  out->time_step = d.time_step;
  out->variant = d.variant == RoystonVariant::Matlab ? MB_ROYSTON_MATLAB : MB_ROYSTON_SHAPIRO_WILK;
  out->seed = d.seed;
  out->threads = d.threads;
}

mb_status mb_rejection_experiment(const mb_rejection_config* cfg, double* frequencies) {
  MB_REQUIRE(cfg && frequencies);
  MB_REQUIRE((cfg->modes || cfg->n_modes == 0) && (cfg->variates || cfg->n_variates == 0));
  return guarded([&] {
    const auto table = rejection_frequency_experiment(rejection_config(*cfg));
    std::copy(table.frequency.begin(), table.frequency.end(), frequencies);
  });
}

mb_status mb_rejection_write_csv(const mb_rejection_config* cfg, const double* frequencies, const char* path,
                                 const char* preamble) {
  MB_REQUIRE(cfg && frequencies && path);
  MB_REQUIRE((cfg->modes || cfg->n_modes == 0) && (cfg->variates || cfg->n_variates == 0));
  return guarded([&] {
    RejectionTable t;
    t.modes.assign(cfg->modes, cfg->modes + cfg->n_modes);
    t.variates.assign(cfg->variates, cfg->variates + cfg->n_variates);
    t.replications = cfg->replications;
    t.frequency.assign(frequencies, frequencies + cfg->n_modes * cfg->n_variates);
    auto out = open_output(path);
    write_rejection_csv(t, out, split_lines(preamble));
    finish(out, path);
  });
}

mb_status mb_covariance_check(size_t count, uint64_t pair_seed, size_t modes, size_t samples, uint64_t seed,
                              unsigned threads, mb_covariance_result* out) {
  MB_REQUIRE(out || count == 0);
  return guarded([&] {
    CovarianceCheckConfig cfg;
    cfg.modes = modes;
    cfg.samples = samples;
    cfg.seed = seed;
    cfg.threads = threads;
    const auto checks = covariance_check(random_point_pairs(count, pair_seed), cfg);
    for (std::size_t k = 0; k < checks.size(); ++k) {
      const auto& c = checks[k];
      for (int i = 0; i < 3; ++i) {
        out[k].a[i] = c.pair.a.x[i];
        out[k].b[i] = c.pair.b.x[i];
      }
      out[k].a[3] = c.pair.a.t;
      out[k].b[3] = c.pair.b.t;
      out[k].expected_trace = c.expected_trace;
      out[k].trace = c.estimate.trace;
      out[k].trace_se = c.estimate.trace_standard_error;
      out[k].z_score = c.z_score;
    }
  });
}

}  // extern "C"
