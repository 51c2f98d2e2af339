// meltblow command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "meltblow/meltblow.h"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using meltblow::tools::PlotSpec;
using meltblow::tools::Series;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kThresholdFailure = 3 };

struct Failure {
  int code;
  std::string message;
};

void check(mb_status s, const std::string& what) {
  if (s == MB_OK) return;
  const int code = (s == MB_ERR_NUMERICAL || s == MB_ERR_DOMAIN_EXIT || s == MB_ERR_INTERNAL) ? kNumericalFailure
                                                                                             : kConfigError;
  throw Failure{code, what + ": " + mb_status_name(s) + ": " + mb_last_error()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// exact at both ends
double lerp(double lo, double hi, double f) { return f == 1.0 ? hi : lo + (hi - lo) * f; }

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

template <class T>
struct Handle {
  T* p = nullptr;
  void (*destroy)(T*);
  explicit Handle(void (*d)(T*)) : destroy(d) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { destroy(p); }
  T* get() const { return p; }
};

// Settings shared by all subcommands.
struct Settings {
  std::uint64_t seed = 1;
  std::string out_dir = "meltblow-out";
  unsigned threads = 0;
  bool no_fluctuations = false;
  bool svg = false;
  std::size_t modes = 50;
  std::string zeta_mode = "zero";

  std::string flow_csv;
  std::string flow_sidecar;
  mb_jet_params jet{};
  mb_sim_config sim{};
  std::vector<double> r0{0.0, 0.0, 0.0};
  std::vector<double> tau0{0.0, 0.0, -1.0};
};

struct SpectrumArgs {
  std::vector<double> zetas{0.0, 1e-4, 1e-2, 1.0, 3.0, 4.0};
  double kappa_min = 1e-3;
  double kappa_max = 1e4;
  std::size_t points = 400;
};

struct SampleArgs {
  std::vector<double> x{0.0, 10.0, 101};
  std::vector<double> y{0.0, 10.0, 101};
  double z = 0.0;
  std::vector<double> times{0.0, 0.5};
  std::uint64_t stream = 0;
};

struct ValidateArgs {
  std::vector<std::size_t> modes{10, 30, 50, 70, 100, 150};
  std::vector<std::size_t> variates{1, 2, 3, 4, 5, 6};
  std::size_t replications = 1000;
  std::size_t sample_size = 50;
  double alpha = 0.05;
  int component = 0;
  double spacing = 1.0;
  double time_step = 0.1;
  std::string variant = "matlab";
  std::size_t cov_pairs = 10;
  std::size_t cov_samples = 10000;
  bool smoke = false;
};

struct SimulateArgs {
  std::uint64_t stream = 0;
};

struct MonteCarloArgs {
  std::size_t samples = 5000;
  std::vector<double> heights{-0.033, -0.066, -0.1};
  bool progress = false;
};

struct FlowArgs {
  std::size_t ny = 101;
  std::size_t nz = 311;
};

std::string join_results(const CLI::Option* opt) {
  std::string s;
  for (const auto& r : opt->results()) s += (s.empty() ? "" : " ") + r;
  return s;
}

// Resolved configuration in the INI dialect read by --config: top-level keys
// first, then the section of the active subcommand. Run-time only settings
// (threads, output directory, config path, plotting) are left out so outputs do not
// depend on them.
std::vector<std::string> resolved_config(const CLI::App& app, const CLI::App& sub) {
  auto emit = [](const CLI::App& a, std::vector<std::string>& lines) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "threads" || name == "out" || name == "svg" ||
          !opt->get_configurable())
        continue;
      std::string value = opt->count() > 0 ? join_results(opt) : opt->get_default_str();
      if (opt->get_expected_max() == 0) value = opt->as<bool>() ? "true" : "false";
      if (opt->get_items_expected_max() > 1 || opt->get_expected_max() > 1) {
        // vectors: "[a,b,c]" from either the results or the default string
        std::string v = value;
        if (!v.empty() && v.front() == '[') {
          lines.push_back(name + "=" + v);
          continue;
        }
        std::string out = "[";
        std::istringstream in(v);
        std::string tok;
        bool first = true;
        while (in >> tok) {
          out += (first ? "" : ",") + tok;
          first = false;
        }
        lines.push_back(name + "=" + out + "]");
        continue;
      }
      if (value.find_first_of(" #;=") != std::string::npos || value.empty()) value = "\"" + value + "\"";
      lines.push_back(name + "=" + value);
    }
  };
  std::vector<std::string> lines;
  emit(app, lines);
  lines.push_back("[" + sub.get_name() + "]");
  emit(sub, lines);
  return lines;
}

std::string preamble_text(const std::vector<std::string>& header) {
  std::string s;
  for (const auto& l : header) s += l + "\n";
  return s;
}

void write_header(std::ostream& out, const std::vector<std::string>& header) {
  for (const auto& l : header) out << "# " << l << '\n';
}

std::ofstream open_file(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure{kConfigError, "cannot open " + p.string() + " for writing"};
  return out;
}

void maybe_svg(const Settings& s, const fs::path& path, const PlotSpec& spec, const std::vector<Series>& series) {
  if (!s.svg) return;
  if (!meltblow::tools::write_svg(path.string(), spec, series))
    throw Failure{kConfigError, "cannot write " + path.string()};
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

int zeta_mode_code(const std::string& m) { return m == "full" ? MB_ZETA_FULL : MB_ZETA_ZERO; }

void finalize_sim(Settings& s) {
  if (s.r0.size() != 3 || s.tau0.size() != 3) throw Failure{kConfigError, "r0 and tau0 need three components"};
  for (int i = 0; i < 3; ++i) {
    s.sim.r0[i] = s.r0[i];
    s.sim.tau0[i] = s.tau0[i];
  }
  s.sim.zeta_mode = zeta_mode_code(s.zeta_mode);
}

mb_flow* make_flow(const Settings& s) {
  mb_flow* f = nullptr;
  if (!s.flow_csv.empty())
    check(mb_flow_load_csv(s.flow_csv.c_str(), s.flow_sidecar.empty() ? nullptr : s.flow_sidecar.c_str(), &f),
          "loading flow field " + s.flow_csv);
  else
    check(mb_flow_create_synthetic(&s.jet, &f), "synthetic jet");
  return f;
}

std::string describe_flow(const mb_flow* f) {
  char buf[512];
  check(mb_flow_describe(f, buf, sizeof buf), "flow description");
  return buf;
}

// ---- spectrum -------------------------------------------------------------

int cmd_spectrum(const Settings& s, const SpectrumArgs& a, const std::vector<std::string>& header) {
  if (!(a.kappa_min > 0.0) || !(a.kappa_max > a.kappa_min) || a.points < 2)
    throw Failure{kConfigError, "spectrum: need 0 < kappa-min < kappa-max and at least 2 points"};
  auto table = open_file(fs::path(s.out_dir) / "spectrum.csv");
  auto curve = open_file(fs::path(s.out_dir) / "spectrum_curve.csv");
  write_header(table, header);
  write_header(curve, header);
  table << "zeta,kappa1,kappa2,residual1,residual2,iterations,mass,second_moment,status\n";
  curve << "zeta,kappa,E\n";
  std::vector<Series> plots;
  std::cout << "zeta_crit = " << fmt(mb_critical_zeta()) << "\n";
  for (double zeta : a.zetas) {
    Handle<mb_spectrum> sp(mb_spectrum_destroy);
    const mb_status st = mb_spectrum_create(zeta, &sp.p);
    if (st != MB_OK) {
      std::string msg = mb_last_error();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      table << fmt(zeta) << ",nan,nan,nan,nan,0,nan,nan,error: " << msg << '\n';
      std::cout << "zeta = " << fmt(zeta) << ": error: " << msg << '\n';
      continue;
    }
    mb_spectrum_info info;
    check(mb_spectrum_info_get(sp.get(), &info), "spectrum info");
    const double mass = info.masses[0] + info.masses[1] + info.masses[2];
    table << fmt(zeta) << ',' << fmt(info.kappa1) << ',' << fmt(info.kappa2) << ',' << fmt(info.residual1) << ','
          << fmt(info.residual2) << ',' << info.iterations << ',' << fmt(mass) << ',' << fmt(info.second_moment)
          << ",ok\n";
    std::cout << "zeta = " << fmt(zeta) << ": kappa1 = " << fmt(info.kappa1) << ", kappa2 = " << fmt(info.kappa2)
              << '\n';
    Series ser{"zeta=" + short_fmt(zeta), {}, {}};
    for (std::size_t i = 0; i < a.points; ++i) {
      const double k = a.kappa_min * std::pow(a.kappa_max / a.kappa_min,
                                              static_cast<double>(i) / static_cast<double>(a.points - 1));
      double e = 0.0;
      check(mb_spectrum_energy(sp.get(), k, &e), "energy spectrum");
      curve << fmt(zeta) << ',' << fmt(k) << ',' << fmt(e) << '\n';
      ser.x.push_back(k);
      ser.y.push_back(e);
    }
    plots.push_back(std::move(ser));
  }
  maybe_svg(s, fs::path(s.out_dir) / "spectrum.svg", {"Energy spectrum E(kappa; zeta)", "kappa", "E", true, true},
            plots);
  return kOk;
}

// ---- sample ---------------------------------------------------------------

std::vector<double> linspace(const std::vector<double>& spec, const char* name) {
  if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2]))
    throw Failure{kConfigError, std::string("sample: --") + name + " expects MIN MAX COUNT"};
  const auto n = static_cast<std::size_t>(spec[2]);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? spec[0] : lerp(spec[0], spec[1], static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

int cmd_sample(const Settings& s, const SampleArgs& a, const std::vector<std::string>& header) {
  const auto xs = linspace(a.x, "x");
  const auto ys = linspace(a.y, "y");
  Handle<mb_spectrum> sp(mb_spectrum_destroy);
  check(mb_spectrum_create(0.0, &sp.p), "spectrum");
  Handle<mb_params> ps(mb_params_destroy);
  check(mb_params_draw(sp.get(), s.modes, s.seed, a.stream, MB_BRANCH_REAL, &ps.p), "parameter set");
  auto out = open_file(fs::path(s.out_dir) / "sample.csv");
  write_header(out, header);
  out << "t,x,y,z,u1,u2,u3\n";
  const double zero[3] = {0.0, 0.0, 0.0};
  std::vector<Series> plots;
  double sum2 = 0.0;
  std::size_t count = 0;
  for (double t : a.times) {
    Series row{"t=" + short_fmt(t) + ", y=" + short_fmt(ys.front()), {}, {}};
    for (double y : ys)
      for (double x : xs) {
        const double p[3] = {x, y, a.z};
        double u[3];
        check(mb_local_fluctuation(ps.get(), p, t, zero, 0.212, u), "field evaluation");
        out << fmt(t) << ',' << fmt(x) << ',' << fmt(y) << ',' << fmt(a.z) << ',' << fmt(u[0]) << ',' << fmt(u[1])
            << ',' << fmt(u[2]) << '\n';
        sum2 += u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        count += 3;
        if (y == ys.front()) {
          row.x.push_back(x);
          row.y.push_back(u[0]);
        }
      }
    plots.push_back(std::move(row));
  }
  std::cout << "points: " << count / 3 << ", mean square per component: " << fmt(sum2 / static_cast<double>(count))
            << " (ensemble value 2/3)\n";
  maybe_svg(s, fs::path(s.out_dir) / "sample.svg", {"Local fluctuation, first component", "x", "u1"}, plots);
  return kOk;
}

// ---- validate -------------------------------------------------------------

int cmd_validate(const Settings& s, ValidateArgs a, const std::vector<std::string>& header) {
  if (a.smoke) {
    a.replications = 10;
    a.cov_samples = std::min<std::size_t>(a.cov_samples, 1000);
  }
  if (a.variant != "matlab" && a.variant != "shapiro-wilk")
    throw Failure{kConfigError, "validate: --variant must be matlab or shapiro-wilk"};
  const unsigned threads = resolve_threads(s.threads);
  mb_rejection_config rc;
  mb_rejection_config_default(&rc);
  rc.modes = a.modes.data();
  rc.n_modes = a.modes.size();
  rc.variates = a.variates.data();
  rc.n_variates = a.variates.size();
  rc.replications = a.replications;
  rc.sample_size = a.sample_size;
  rc.alpha = a.alpha;
  rc.component = a.component;
  rc.spacing = a.spacing;
  rc.time_step = a.time_step;
  rc.variant = a.variant == "matlab" ? MB_ROYSTON_MATLAB : MB_ROYSTON_SHAPIRO_WILK;
  rc.seed = s.seed;
  rc.threads = threads;
  std::vector<double> freq(a.modes.size() * a.variates.size());
  check(mb_rejection_experiment(&rc, freq.data()), "rejection experiment");
  const fs::path table_path = fs::path(s.out_dir) / "rejection_table.csv";
  check(mb_rejection_write_csv(&rc, freq.data(), table_path.string().c_str(), preamble_text(header).c_str()),
        "writing " + table_path.string());

  std::cout << "Royston rejection frequencies (alpha = " << a.alpha << ", " << a.replications << " replications)\n";
  std::cout << "N\\d";
  for (auto d : a.variates) std::cout << '\t' << d;
  std::cout << '\n';
  for (std::size_t i = 0; i < a.modes.size(); ++i) {
    std::cout << a.modes[i];
    for (std::size_t j = 0; j < a.variates.size(); ++j) std::cout << '\t' << short_fmt(freq[i * a.variates.size() + j]);
    std::cout << '\n';
  }

  bool ok = true;
  const bool judged = a.replications >= 100;
  auto cell = [&](std::size_t n, std::size_t d) -> double {
    for (std::size_t i = 0; i < a.modes.size(); ++i)
      for (std::size_t j = 0; j < a.variates.size(); ++j)
        if (a.modes[i] == n && a.variates[j] == d) return freq[i * a.variates.size() + j];
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double reps = static_cast<double>(a.replications);
  if (const double f50 = cell(50, 3); !std::isnan(f50)) {
    const double band = 3.0 * std::sqrt(0.12 * 0.88 / reps);
    const bool pass = std::abs(f50 - 0.12) <= band;
    std::cout << (judged ? (pass ? "PASS" : "FAIL") : "INFO") << "  N=50, d=3 rejection " << short_fmt(f50)
              << " within 0.12 +- " << short_fmt(band) << '\n';
    ok &= !judged || pass;
  }
  if (const double f10 = cell(10, 3); !std::isnan(f10)) {
    const bool pass = f10 > 0.3;
    std::cout << (judged ? (pass ? "PASS" : "FAIL") : "INFO") << "  N=10, d=3 rejection " << short_fmt(f10)
              << " > 0.3 (high-rejection row)\n";
    ok &= !judged || pass;
  }
  if (!judged) std::cout << "(fewer than 100 replications: rejection thresholds not judged)\n";

  // Cross-covariances at random point pairs.
  std::vector<mb_covariance_result> cov(a.cov_pairs);
  check(mb_covariance_check(a.cov_pairs, s.seed ^ 0x5eedULL, s.modes, a.cov_samples, s.seed, threads, cov.data()),
        "covariance check");
  auto out = open_file(fs::path(s.out_dir) / "covariance.csv");
  write_header(out, header);
  out << "xa,ya,za,ta,xb,yb,zb,tb,expected_trace,trace,trace_se,z_score,status\n";
  std::size_t bad = 0;
  for (const auto& c : cov) {
    const bool pass = std::abs(c.z_score) <= 3.0;
    bad += pass ? 0 : 1;
    for (double v : c.a) out << fmt(v) << ',';
    for (double v : c.b) out << fmt(v) << ',';
    out << fmt(c.expected_trace) << ',' << fmt(c.trace) << ',' << fmt(c.trace_se) << ',' << fmt(c.z_score) << ','
        << (pass ? "ok" : "outside 3 SE") << '\n';
  }
  std::cout << (bad == 0 ? "PASS" : "FAIL") << "  covariance trace within 3 SE at " << cov.size() - bad << " of "
            << cov.size() << " point pairs (" << a.cov_samples << " parameter sets)\n";
  ok &= bad == 0;

  // Lag-0 variance of each component.
  Handle<mb_spectrum> sp(mb_spectrum_destroy);
  check(mb_spectrum_create(0.0, &sp.p), "spectrum");
  std::vector<double> samples(a.cov_samples * 3);
  const double x0[3] = {0.3, -0.2, 0.1}, zero[3] = {0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < a.cov_samples; ++k) {
    Handle<mb_params> ps(mb_params_destroy);
    check(mb_params_draw(sp.get(), s.modes, s.seed ^ 0x1a90ULL, k, MB_BRANCH_REAL, &ps.p), "parameter set");
    check(mb_local_fluctuation(ps.get(), x0, 0.0, zero, 0.212, &samples[3 * k]), "field evaluation");
  }
  double value[9], se[9];
  check(mb_covariance(samples.data(), samples.data(), a.cov_samples, 3, 3, value, se, nullptr, nullptr),
        "covariance");
  for (int j = 0; j < 3; ++j) {
    const double v = value[4 * j], e = se[4 * j];
    const bool pass = std::abs(v - 2.0 / 3.0) <= 3.0 * e;
    std::cout << (pass ? "PASS" : "FAIL") << "  lag-0 variance of component " << j + 1 << ": " << short_fmt(v)
              << " +- " << short_fmt(e) << " (target 2/3)\n";
    out << "lag0," << j + 1 << ",,,,,,," << fmt(2.0 / 3.0) << ',' << fmt(v) << ',' << fmt(e) << ','
        << fmt((v - 2.0 / 3.0) / e) << ',' << (pass ? "ok" : "outside 3 SE") << '\n';
    ok &= pass;
  }
  return ok ? kOk : kThresholdFailure;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const Settings& s, const SimulateArgs& a, const std::vector<std::string>& header) {
  Handle<mb_flow> flow(mb_flow_destroy);
  flow.p = make_flow(s);
  Handle<mb_spectrum> sp(mb_spectrum_destroy);
  Handle<mb_params> ps(mb_params_destroy);
  if (!s.no_fluctuations) {
    check(mb_spectrum_create(0.0, &sp.p), "spectrum");
    check(mb_params_draw(sp.get(), s.modes, s.seed, a.stream, MB_BRANCH_REAL, &ps.p), "parameter set");
  }
  Handle<mb_trajectory> tr(mb_trajectory_destroy);
  check(mb_simulate(flow.get(), ps.get(), &s.sim, &tr.p), "trajectory");
  auto lines = header;
  lines.push_back("; flow: " + describe_flow(flow.get()));
  const fs::path path = fs::path(s.out_dir) / "trajectory.csv";
  check(mb_trajectory_write_csv(tr.get(), path.string().c_str(), preamble_text(lines).c_str()),
        "writing " + path.string());

  const std::size_t n = mb_trajectory_size(tr.get());
  std::size_t resolved = 0;
  Series e{"e", {}, {}}, dt{"dt", {}, {}}, tt{"t_T", {}, {}}, lt{"l_T/v_rel", {}, {}}, z{"r3", {}, {}},
      y{"r2", {}, {}};
  mb_trajectory_point p{};
  for (std::size_t i = 0; i < n; ++i) {
    check(mb_trajectory_point_get(tr.get(), i, &p), "trajectory row");
    e.x.push_back(p.t);
    e.y.push_back(p.e);
    z.x.push_back(p.t);
    z.y.push_back(p.r[2]);
    y.x.push_back(p.t);
    y.y.push_back(p.r[1]);
    if (i > 0) {
      dt.x.push_back(p.t);
      dt.y.push_back(p.dt);
      tt.x.push_back(p.t);
      tt.y.push_back(p.t_T);
      lt.x.push_back(p.t);
      lt.y.push_back(p.lT_over_vrel);
      resolved += p.dt < std::min(p.t_T, p.lT_over_vrel) ? 1 : 0;
    }
  }
  std::cout << "steps: " << n - 1 << " accepted, " << mb_trajectory_rejected(tr.get()) << " rejected\n"
            << "termination: "
            << (mb_trajectory_termination(tr.get()) == MB_TERMINATION_HORIZON ? "horizon" : "domain exit") << '\n'
            << "final: t = " << fmt(p.t) << ", r3 = " << fmt(p.r[2]) << ", e = " << fmt(p.e) << '\n'
            << "steps with dt < min(t_T, l_T/v_rel): " << resolved << " of " << n - 1 << '\n';
  const fs::path dir(s.out_dir);
  maybe_svg(s, dir / "trajectory_e.svg", {"Elongation", "t [s]", "e", false, true}, {e});
  maybe_svg(s, dir / "trajectory_dt.svg", {"Step size and turbulent scales", "t [s]", "[s]", false, true},
            {dt, tt, lt});
  maybe_svg(s, dir / "trajectory_r.svg", {"Position", "t [s]", "[m]"}, {z, y});
  return kOk;
}

// ---- montecarlo -----------------------------------------------------------

void report_progress(std::size_t done, std::size_t total, void*) {
  if (done == total || done % std::max<std::size_t>(1, total / 100) == 0)
    std::cerr << "\rreplications: " << done << "/" << total << (done == total ? "\n" : "") << std::flush;
}

int cmd_montecarlo(const Settings& s, const MonteCarloArgs& a, const std::vector<std::string>& header) {
  Handle<mb_flow> flow(mb_flow_destroy);
  flow.p = make_flow(s);
  mb_mc_options opt;
  mb_mc_options_default(&opt);
  opt.samples = a.samples;
  opt.heights = a.heights.data();
  opt.n_heights = a.heights.size();
  opt.seed = s.seed;
  opt.modes = s.modes;
  opt.fluctuations = s.no_fluctuations ? 0 : 1;
  opt.threads = resolve_threads(s.threads);
  Handle<mb_montecarlo> mc(mb_montecarlo_destroy);
  check(mb_montecarlo_run(flow.get(), &s.sim, &opt, a.progress ? report_progress : nullptr, nullptr, &mc.p),
        "Monte Carlo");
  auto lines = header;
  lines.push_back("; flow: " + describe_flow(flow.get()));
  const std::string pre = preamble_text(lines);
  const fs::path dir(s.out_dir);
  const std::string json = (dir / "montecarlo.json").string(), dens = (dir / "montecarlo_density.csv").string(),
                    samp = (dir / "montecarlo_samples.csv").string();
  check(mb_montecarlo_write(mc.get(), json.c_str(), dens.c_str(), samp.c_str(), pre.c_str(), pre.c_str()),
        "writing Monte Carlo output");

  const std::size_t failures = mb_montecarlo_failures(mc.get());
  std::cout << "replications: " << a.samples << ", failed: " << failures << " ("
            << short_fmt(static_cast<double>(failures) / static_cast<double>(a.samples)) << ")\n";
  std::cout << "level\tcount\tmean\tmedian\tq05\tq95\tbaseline\n";
  std::vector<Series> plots;
  for (std::size_t l = 0; l <= a.heights.size(); ++l) {
    mb_level_summary sum;
    check(mb_montecarlo_level(mc.get(), l, &sum), "Monte Carlo summary");
    const std::string label = l < a.heights.size() ? "r3=" + short_fmt(sum.height) : "t=T";
    std::cout << label << '\t' << sum.count << '\t' << short_fmt(sum.mean) << '\t' << short_fmt(sum.median) << '\t'
              << short_fmt(sum.q05) << '\t' << short_fmt(sum.q95) << '\t' << short_fmt(sum.baseline) << '\n';
  }
  if (s.svg) {
    std::ifstream in(dens);
    std::string line;
    Series* cur = nullptr;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("level,", 0) == 0) continue;
      std::istringstream row(line);
      std::string level, kind, x, v;
      std::getline(row, level, ',');
      std::getline(row, kind, ',');
      std::getline(row, x, ',');
      std::getline(row, v, ',');
      if (kind != "density") continue;
      if (!cur || cur->label != level) {
        plots.push_back({level, {}, {}});
        cur = &plots.back();
      }
      cur->x.push_back(std::stod(x));
      cur->y.push_back(std::stod(v));
    }
    maybe_svg(s, dir / "montecarlo_density.svg", {"Elongation density", "e", "density"}, plots);
  }
  if (failures == a.samples) return kNumericalFailure;
  return kOk;
}

// ---- flow -----------------------------------------------------------------

int cmd_flow(const Settings& s, const FlowArgs& a) {
  if (a.ny < 2 || a.nz < 2) throw Failure{kConfigError, "flow: need at least 2 nodes per axis"};
  Handle<mb_flow> flow(mb_flow_destroy);
  flow.p = make_flow(s);
  std::vector<double> y(a.ny), z(a.nz);
  for (std::size_t i = 0; i < a.ny; ++i)
    y[i] = lerp(-s.jet.y_half_extent, s.jet.y_half_extent, static_cast<double>(i) / static_cast<double>(a.ny - 1));
  for (std::size_t i = 0; i < a.nz; ++i)
    z[i] = lerp(s.jet.z_min, s.jet.z_max, static_cast<double>(i) / static_cast<double>(a.nz - 1));
  const fs::path csv = fs::path(s.out_dir) / "flow.csv";
  check(mb_flow_export(flow.get(), y.data(), a.ny, z.data(), a.nz, csv.string().c_str(), nullptr),
        "writing " + csv.string());
  std::cout << "wrote " << csv.string() << " and its .json sidecar\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meltblow: Gaussian turbulence fluctuation sampling and random-ODE fiber-jet simulation"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI file: top-level keys for shared settings, [subcommand] sections")
      ->configurable(false);
  app.require_subcommand(1);
  app.fallthrough();

  Settings s;
  mb_jet_params_default(&s.jet);
  mb_sim_config_default(&s.sim);

  app.add_option("--seed", s.seed, "Master seed");
  app.add_option("--out", s.out_dir, "Output directory");
  app.add_option("--threads", s.threads, "Worker threads (0: all cores)")->envname("MELTBLOW_THREADS");
  app.add_flag("--no-fluctuations", s.no_fluctuations, "Drop u' (fluctuation-free baseline)");
  app.add_flag("--svg", s.svg, "Also write SVG plots");
  app.add_option("--modes", s.modes, "Superposition count N")->check(CLI::PositiveNumber);
  app.add_option("--zeta-mode", s.zeta_mode, "Spectrum parameter in the globalization")
      ->check(CLI::IsMember({"zero", "full"}));

  app.add_option("--flow-csv", s.flow_csv, "k-epsilon flow CSV (default: synthetic planar jet)");
  app.add_option("--flow-sidecar", s.flow_sidecar, "JSON sidecar of --flow-csv (default: same stem, .json)");
  app.add_option("--jet-speed", s.jet.inlet_speed, "Synthetic jet: slot exit speed U0 [m/s]");
  app.add_option("--jet-k", s.jet.inlet_k, "Synthetic jet: k at the slot [m^2/s^2]");
  app.add_option("--jet-eps", s.jet.inlet_eps, "Synthetic jet: epsilon at the slot [m^2/s^3]");
  app.add_option("--jet-half-width", s.jet.slot_half_width, "Synthetic jet: slot half width b0 [m]");
  app.add_option("--jet-virtual-origin", s.jet.virtual_origin, "Synthetic jet: virtual origin z0 [m]");
  app.add_option("--jet-spreading", s.jet.spreading_rate, "Synthetic jet: spreading rate S");
  app.add_option("--jet-speed-decay", s.jet.speed_decay, "Synthetic jet: centerline speed decay exponent");
  app.add_option("--jet-k-decay", s.jet.k_decay, "Synthetic jet: k decay exponent");
  app.add_option("--jet-eps-decay", s.jet.eps_decay, "Synthetic jet: epsilon decay exponent");
  app.add_option("--jet-ambient", s.jet.ambient_fraction, "Synthetic jet: k/k_c far from the axis");
  app.add_option("--nu", s.jet.nu, "Synthetic jet: kinematic viscosity [m^2/s]");
  app.add_option("--rho", s.jet.rho, "Synthetic jet: air density [kg/m^3]");
  app.add_option("--jet-y-extent", s.jet.y_half_extent, "Synthetic jet: domain half width [m]");
  app.add_option("--jet-z-min", s.jet.z_min, "Synthetic jet: lower domain end [m]");
  app.add_option("--jet-z-max", s.jet.z_max, "Synthetic jet: upper domain end [m]");

  app.add_option("--v0", s.sim.v0, "Fiber exit speed [m/s]");
  app.add_option("--d0", s.sim.d0, "Nozzle diameter [m]");
  app.add_option("--rho-fiber", s.sim.rho_fiber, "Fiber density [kg/m^3]");
  app.add_option("--r0", s.r0, "Initial position [m]")->expected(3);
  app.add_option("--tau0", s.tau0, "Initial unit tangent")->expected(3);
  app.add_option("--horizon", s.sim.horizon, "Simulated time T [s]");
  app.add_option("--drag-cn", s.sim.drag_normal, "Normal drag coefficient c_n");
  app.add_option("--drag-ct", s.sim.drag_tangential, "Tangential drag coefficient c_t");
  app.add_option("--rtol", s.sim.rtol, "Relative tolerance");
  app.add_option("--atol", s.sim.atol, "Absolute tolerance");
  app.add_option("--dt-min", s.sim.dt_min, "Step size floor [s]");
  app.add_option("--max-steps", s.sim.max_steps, "Step budget per trajectory");

  SpectrumArgs spec_args;
  auto* spectrum = app.add_subcommand("spectrum", "Transition wavenumbers and E(kappa) curves");
  spectrum->add_option("--zeta", spec_args.zetas, "Spectrum parameters");
  spectrum->add_option("--kappa-min", spec_args.kappa_min, "Curve start");
  spectrum->add_option("--kappa-max", spec_args.kappa_max, "Curve end");
  spectrum->add_option("--points", spec_args.points, "Curve samples (log spaced)");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Evaluate one realization of u'_loc on a grid (dimensionless)");
  sample->add_option("--x", sample_args.x, "MIN MAX COUNT")->expected(3);
  sample->add_option("--y", sample_args.y, "MIN MAX COUNT")->expected(3);
  sample->add_option("--z", sample_args.z, "Fixed z");
  sample->add_option("--times", sample_args.times, "Evaluation times");
  sample->add_option("--stream", sample_args.stream, "Parameter set stream");

  ValidateArgs val_args;
  auto* validate = app.add_subcommand("validate", "Normality table and covariance checks");
  validate->add_option("--N", val_args.modes, "Superposition counts (rows)");
  validate->add_option("--d", val_args.variates, "Variate sizes (columns)");
  validate->add_option("--replications", val_args.replications, "Monte Carlo replications per cell");
  validate->add_option("--sample-size", val_args.sample_size, "Observations per test");
  validate->add_option("--alpha", val_args.alpha, "Significance level");
  validate->add_option("--component", val_args.component, "Field component 0, 1 or 2");
  validate->add_option("--spacing", val_args.spacing, "Distance between evaluation points");
  validate->add_option("--time-step", val_args.time_step, "Time between evaluation points");
  validate->add_option("--variant", val_args.variant, "Per-variate statistic: matlab or shapiro-wilk");
  validate->add_option("--cov-pairs", val_args.cov_pairs, "Random point pairs for the covariance check");
  validate->add_option("--cov-samples", val_args.cov_samples, "Parameter sets for the covariance check");
  validate->add_flag("--smoke", val_args.smoke, "10 replications, reduced covariance sample");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "One fiber trajectory");
  simulate->add_option("--stream", sim_args.stream, "Parameter set stream (Monte Carlo replication index)");

  MonteCarloArgs mc_args;
  auto* montecarlo = app.add_subcommand("montecarlo", "Elongation statistics over many trajectories");
  montecarlo->add_option("--samples", mc_args.samples, "Replications")->check(CLI::PositiveNumber);
  montecarlo->add_option("--heights", mc_args.heights, "Crossing heights r3 [m]");
  montecarlo->add_flag("--progress", mc_args.progress, "Progress on stderr")->configurable(false);

  FlowArgs flow_args;
  auto* flow = app.add_subcommand("flow", "Export the synthetic jet as a k-epsilon CSV grid");
  flow->add_option("--ny", flow_args.ny, "Nodes across the jet");
  flow->add_option("--nz", flow_args.nz, "Nodes along the jet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    finalize_sim(s);
    fs::create_directories(s.out_dir);
    const CLI::App* sub = app.get_subcommands().front();
    std::vector<std::string> header{std::string("meltblow ") + mb_version() + " " + sub->get_name()};
    for (auto& l : resolved_config(app, *sub)) header.push_back(l);

    if (sub == spectrum) return cmd_spectrum(s, spec_args, header);
    if (sub == sample) return cmd_sample(s, sample_args, header);
    if (sub == validate) return cmd_validate(s, val_args, header);
    if (sub == simulate) return cmd_simulate(s, sim_args, header);
    if (sub == montecarlo) return cmd_montecarlo(s, mc_args, header);
    if (sub == flow) return cmd_flow(s, flow_args);
  } catch (const Failure& f) {
    std::cerr << "meltblow: " << f.message << '\n';
    return f.code;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "meltblow: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
