#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "meltblow/fieldsampler.hpp"
#include "meltblow/flowfield.hpp"
#include "meltblow/vec3.hpp"

namespace meltblow {

struct FiberParams {
  double v0 = 1e-2;         // nozzle exit speed [m/s]
  double d0 = 4e-4;         // nozzle diameter [m]
  double rho_fiber = 7e2;   // [kg/m^3]
  Vec3 r0{};                // initial position [m]
  Vec3 tau0{0.0, 0.0, -1.0};
  double horizon = 1e-3;    // T [s]

  /// Throws ValidationError on non-positive scalars or a non-unit tau0.
  void validate() const;
};

struct JetState {
  Vec3 r;      // [m]
  Vec3 v;      // [m/s]
  double e;    // elongation A0/A [-]
};

struct StateDerivative {
  Vec3 dr;
  Vec3 dv;
  double de;
};

/// Dimensionless aerodynamic force f(tangent, w) on a slender element with unit
/// tangent and dimensionless relative velocity w. Must satisfy f(t, 0) = 0.
class DragClosure {
 public:
  virtual ~DragClosure() = default;
  virtual Vec3 force(const Vec3& tangent, const Vec3& w) const = 0;
  virtual std::string describe() const = 0;
};

/// c_n |w_n| w_n + c_t |w_t| w_t with w_t = (w . t) t.
Vec3 default_drag(const Vec3& tangent, const Vec3& w, double c_n = 1.0, double c_t = 0.1);

class QuadraticDrag : public DragClosure {
 public:
  explicit QuadraticDrag(double c_n = 1.0, double c_t = 0.1) : c_n_(c_n), c_t_(c_t) {}
  Vec3 force(const Vec3& tangent, const Vec3& w) const override { return default_drag(tangent, w, c_n_, c_t_); }
  std::string describe() const override;
  double normal_coefficient() const { return c_n_; }
  double tangential_coefficient() const { return c_t_; }

 private:
  double c_n_;
  double c_t_;
};

/// a = (4/pi) rho nu^2 / (rho_F d0^3)
double coefficient_a(const FlowSample& sample, const FiberParams& fp);
/// b = nu / d0
double coefficient_b(const FlowSample& sample, const FiberParams& fp);

/// Flow quantities seen at the fiber point during one right-hand-side evaluation.
struct RhsDiagnostics {
  FlowSample flow;
  Vec3 air_velocity;  // u = u_bar + u'
};

/// Right-hand side of the fiber point system. `fluctuations` may be null for
/// the mean-flow-only baseline. Throws NumericalError when |v| = 0 and
/// propagates DomainExit from the flow.
StateDerivative ode_rhs(double t, const JetState& state, const FlowSource& flow,
                        const GlobalFluctuationField* fluctuations, const DragClosure& closure, const FiberParams& fp,
                        RhsDiagnostics* diagnostics = nullptr);

struct IntegratorOptions {
  double rtol = 1e-6;
  double atol = 1e-9;
  double dt_min = 1e-12;      // step underflow threshold [s]
  double dt_initial = 0.0;    // 0 selects automatically
  std::size_t max_steps = 20'000'000;
};

/// One accepted step, reported at its end point.
struct TrajectoryPoint {
  double t = 0.0;
  JetState state{};
  double dt = 0.0;
  double t_T = 0.0;            // k/eps at r
  double lT_over_vrel = 0.0;   // k^{3/2}/eps / |u_bar - v|
  Vec3 air_velocity{};         // u at r
};

enum class Termination { Horizon, DomainExit };

struct TrajectoryRecord {
  TrajectoryPoint initial;             // t = 0, dt = 0
  std::vector<TrajectoryPoint> steps;  // accepted steps; times strictly increasing
  Termination termination = Termination::Horizon;
  std::string message;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;

  const TrajectoryPoint& last() const { return steps.empty() ? initial : steps.back(); }
};

/// Called for the initial point and every accepted step.
using StepObserver = std::function<void(const TrajectoryPoint&)>;

struct TrajectorySetup {
  const FlowSource* flow = nullptr;
  const ParameterSet* parameters = nullptr;  // null: fluctuations off
  const DragClosure* closure = nullptr;
  ZetaMode zeta_mode = ZetaMode::Zero;
  TemporalModel temporal{};
};

/// Dormand-Prince 5(4) with PI step-size control from (r0, v0 tau0, 1) up to
/// the horizon or the first domain exit. Throws NumericalError on step
/// underflow or a singular tangent. The returned record carries counts only;
/// states go to `observer`.
TrajectoryRecord integrate_observed(const FiberParams& fp, const TrajectorySetup& setup,
                                    const IntegratorOptions& options, const StepObserver& observer);

TrajectoryRecord integrate_trajectory(const FiberParams& fp, const FlowSource& flow, const ParameterSet* ps,
                                      const DragClosure& closure, const IntegratorOptions& options = {},
                                      ZetaMode mode = ZetaMode::Zero);

/// Columns t,r1,r2,r3,v1,v2,v3,e,dt,tT,lT_over_vrel,u1,u2,u3; the first row is
/// the initial condition. Lines in `preamble` are written first, prefixed "# ".
void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out,
                          const std::vector<std::string>& preamble = {});

std::string to_string(Termination t);

}  // namespace meltblow
