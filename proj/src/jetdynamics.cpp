#include "meltblow/jetdynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

using State = std::array<double, 7>;

State pack(const JetState& s) { return {s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z, s.e}; }
JetState unpack(const State& y) { return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, y[6]}; }
State pack(const StateDerivative& d) { return {d.dr.x, d.dr.y, d.dr.z, d.dv.x, d.dv.y, d.dv.z, d.de}; }

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// PI controller constants (Hairer & Wanner, DOPRI5).
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kShrinkLimit = 5.0;   // h may shrink by at most 1/5 per step
constexpr double kGrowLimit = 0.1;     // and grow by at most 10x

TrajectoryPoint make_point(double t, const JetState& s, double dt, const RhsDiagnostics& d) {
  TrajectoryPoint p;
  p.t = t;
  p.state = s;
  p.dt = dt;
  p.t_T = d.flow.time_scale();
  const double vrel = norm(d.flow.mean_velocity - s.v);
  p.lT_over_vrel = vrel > 0.0 ? d.flow.length_scale() / vrel : std::numeric_limits<double>::infinity();
  p.air_velocity = d.air_velocity;
  return p;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void FiberParams::validate() const {
  if (!(v0 > 0.0) || !(d0 > 0.0) || !(rho_fiber > 0.0) || !(horizon > 0.0))
    throw ValidationError("fiber parameters: v0, d0, rho_fiber and horizon must be positive");
  if (!(std::abs(norm(tau0) - 1.0) < 1e-12)) throw ValidationError("fiber parameters: tau0 must be a unit vector");
}

Vec3 default_drag(const Vec3& tangent, const Vec3& w, double c_n, double c_t) {
  const Vec3 w_t = tangent * dot(w, tangent);
  const Vec3 w_n = w - w_t;
  return w_n * (c_n * norm(w_n)) + w_t * (c_t * norm(w_t));
}

std::string QuadraticDrag::describe() const {
  std::ostringstream out;
  out << "quadratic drag (c_n=" << c_n_ << ", c_t=" << c_t_ << ")";
  return out.str();
}

double coefficient_a(const FlowSample& s, const FiberParams& fp) {
  return 4.0 / std::numbers::pi * s.rho * s.nu * s.nu / (fp.rho_fiber * fp.d0 * fp.d0 * fp.d0);
}

double coefficient_b(const FlowSample& s, const FiberParams& fp) { return s.nu / fp.d0; }

StateDerivative ode_rhs(double t, const JetState& state, const FlowSource& flow,
                        const GlobalFluctuationField* fluctuations, const DragClosure& closure, const FiberParams& fp,
                        RhsDiagnostics* diagnostics) {
  const double speed = norm(state.v);
  if (!(speed > 0.0)) throw NumericalError("fiber velocity vanished: tangent direction undefined");
  const FlowSample s = flow.sample(state.r, t);
  Vec3 u = s.mean_velocity;
  if (fluctuations) u += fluctuations->at(s, state.r, t);
  const double sqrt_e = std::sqrt(state.e);
  const Vec3 w = (u - state.v) / (sqrt_e * coefficient_b(s, fp));
  const Vec3 f = closure.force(state.v / speed, w);
  const double scale = state.e * sqrt_e * coefficient_a(s, fp);
  if (diagnostics) {
    diagnostics->flow = s;
    diagnostics->air_velocity = u;
  }
  return {state.v, f * scale, scale * norm(f) / fp.v0};
}

TrajectoryRecord integrate_observed(const FiberParams& fp, const TrajectorySetup& setup,
                                    const IntegratorOptions& opt, const StepObserver& observer) {
  fp.validate();
  if (!setup.flow || !setup.closure) throw DomainError("trajectory setup needs a flow source and a drag closure");
  std::unique_ptr<GlobalFluctuationField> field;
  if (setup.parameters)
    field = std::make_unique<GlobalFluctuationField>(*setup.flow, *setup.parameters, setup.zeta_mode,
                                                     setup.temporal);

  TrajectoryRecord rec;
  auto rhs = [&](double t, const State& y, RhsDiagnostics* diag) {
    ++rec.rhs_evaluations;
    return pack(ode_rhs(t, unpack(y), *setup.flow, field.get(), *setup.closure, fp, diag));
  };
  auto error_scale = [&](const State& y0, const State& y1, std::size_t i) {
    return opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
  };

  const double T = fp.horizon;
  double t = 0.0;
  State y = pack(JetState{fp.r0, fp.tau0 * fp.v0, 1.0});
  RhsDiagnostics diag;
  State k1;
  try {
    k1 = rhs(t, y, &diag);
  } catch (const DomainExit& e) {
    rec.termination = Termination::DomainExit;
    rec.message = e.what();
    return rec;
  }
  rec.initial = make_point(t, unpack(y), 0.0, diag);
  if (observer) observer(rec.initial);

  // Initial step guess (Hairer, Norsett & Wanner, Sec. II.4).
  double h = opt.dt_initial;
  if (!(h > 0.0)) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double sk = opt.atol + opt.rtol * std::abs(y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1 += (k1[i] / sk) * (k1[i] / sk);
    }
    d0 = std::sqrt(d0 / y.size());
    d1 = std::sqrt(d1 / y.size());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, T);
    State y1;
    for (std::size_t i = 0; i < y.size(); ++i) y1[i] = y[i] + h0 * k1[i];
    double d2 = 0.0;
    try {
      const State f1 = rhs(t + h0, y1, nullptr);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double sk = opt.atol + opt.rtol * std::abs(y[i]);
        d2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
      }
      d2 = std::sqrt(d2 / y.size()) / h0;
    } catch (const DomainExit&) {
      d2 = 0.0;
    }
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min(100.0 * h0, h1);
  }

  double facold = 1e-4;
  bool last_rejected = false;
  State k2, k3, k4, k5, k6, k7, ys, ynew;
  std::size_t accepted = 0;

  while (t < T) {
    if (accepted + rec.rejected >= opt.max_steps) {
      std::ostringstream msg;
      msg << "step budget of " << opt.max_steps << " exhausted at t = " << t;
      throw NumericalError(msg.str());
    }
    if (h < opt.dt_min) {
      std::ostringstream msg;
      msg << "step size underflow: dt = " << h << " < " << opt.dt_min << " at t = " << t << ", e = " << y[6]
          << ", |v| = " << std::hypot(y[3], y[4], y[5]);
      throw NumericalError(msg.str());
    }
    const bool final_step = t + h >= T;
    if (final_step) h = T - t;

    RhsDiagnostics end_diag;
    try {
      for (std::size_t i = 0; i < 7; ++i) ys[i] = y[i] + h * a21 * k1[i];
      k2 = rhs(t + c2 * h, ys, nullptr);
      for (std::size_t i = 0; i < 7; ++i) ys[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      k3 = rhs(t + c3 * h, ys, nullptr);
      for (std::size_t i = 0; i < 7; ++i) ys[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      k4 = rhs(t + c4 * h, ys, nullptr);
      for (std::size_t i = 0; i < 7; ++i)
        ys[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      k5 = rhs(t + c5 * h, ys, nullptr);
      for (std::size_t i = 0; i < 7; ++i)
        ys[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      k6 = rhs(t + h, ys, nullptr);
      for (std::size_t i = 0; i < 7; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      k7 = rhs(t + h, ynew, &end_diag);
    } catch (const DomainExit& e) {
      // Shrink towards the boundary; give up once the step is negligible.
      ++rec.rejected;
      h *= 0.25;
      last_rejected = true;
      if (h < opt.dt_min) {
        rec.termination = Termination::DomainExit;
        rec.message = e.what();
        return rec;
      }
      continue;
    } catch (const NumericalError&) {
      // A trial stage left the admissible set (|v| = 0 or non-finite); retry smaller.
      ++rec.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    double err = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double r = ei / error_scale(y, ynew, i);
      err += r * r;
    }
    err = std::sqrt(err / 7.0);
    if (!std::isfinite(err)) err = 1e10;

    const double fac11 = std::pow(err, kExpo);
    double fac = fac11 / std::pow(facold, kBeta);
    fac = std::max(kGrowLimit, std::min(kShrinkLimit, fac / kSafety));
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      t = final_step ? T : t + h;
      y = ynew;
      k1 = k7;
      ++accepted;
      if (y[6] < 1.0) y[6] = 1.0;  // e(0) = 1 and de/dt >= 0
      if (observer) observer(make_point(t, unpack(y), h, end_diag));
      h = hnew;
    } else {
      ++rec.rejected;
      last_rejected = true;
      h = h / std::min(kShrinkLimit, fac11 / kSafety);
    }
  }
  rec.termination = Termination::Horizon;
  return rec;
}

TrajectoryRecord integrate_trajectory(const FiberParams& fp, const FlowSource& flow, const ParameterSet* ps,
                                      const DragClosure& closure, const IntegratorOptions& options, ZetaMode mode) {
  TrajectorySetup setup;
  setup.flow = &flow;
  setup.parameters = ps;
  setup.closure = &closure;
  setup.zeta_mode = mode;
  std::vector<TrajectoryPoint> steps;
  TrajectoryRecord rec = integrate_observed(fp, setup, options, [&](const TrajectoryPoint& p) {
    if (p.dt > 0.0) steps.push_back(p);
  });
  rec.steps = std::move(steps);
  return rec;
}

void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "t,r1,r2,r3,v1,v2,v3,e,dt,tT,lT_over_vrel,u1,u2,u3\n";
  auto row = [&](const TrajectoryPoint& p) {
    const double values[] = {p.t,       p.state.r.x, p.state.r.y,    p.state.r.z,      p.state.v.x,
                             p.state.v.y, p.state.v.z, p.state.e,    p.dt,             p.t_T,
                             p.lT_over_vrel, p.air_velocity.x, p.air_velocity.y, p.air_velocity.z};
    for (std::size_t i = 0; i < std::size(values); ++i) out << (i ? "," : "") << format_number(values[i]);
    out << '\n';
  };
  row(record.initial);
  for (const auto& p : record.steps) row(p);
}

std::string to_string(Termination t) { return t == Termination::Horizon ? "horizon" : "domain_exit"; }

}  // namespace meltblow
