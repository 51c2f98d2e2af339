#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "meltblow/fieldsampler.hpp"
#include "meltblow/spectrum.hpp"
#include "meltblow/vec3.hpp"

namespace meltblow {

/// Mean flow and k-epsilon statistics at one point (SI units).
struct FlowSample {
  Vec3 mean_velocity;  // [m/s]
  double k = 0.0;      // [m^2/s^2]
  double eps = 0.0;    // [m^2/s^3]
  double nu = 0.0;     // [m^2/s]
  double rho = 0.0;    // [kg/m^3]

  double zeta() const { return eps * nu / (k * k); }
  double length_scale() const { return k * std::sqrt(k) / eps; }  // l_T = k^{3/2}/eps
  double time_scale() const { return k / eps; }                   // t_T = k/eps
};

/// Anything that can be asked for flow statistics at (x, t). Implementations
/// are immutable and safe to share between threads. `sample` throws
/// DomainExit outside the region where data exists.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual FlowSample sample(const Vec3& x, double t) const = 0;
  virtual std::string describe() const = 0;
};

/// Stationary, slot-homogeneous k-epsilon data on a rectilinear (y, z) grid.
/// Node (iy, iz) is stored at index iz * ny + iy.
class FlowFieldGrid : public FlowSource {
 public:
  FlowFieldGrid() = default;
  /// Throws ValidationError on non-monotone axes, size mismatch or k, eps <= 0.
  FlowFieldGrid(std::vector<double> y, std::vector<double> z, std::vector<double> u_y, std::vector<double> u_z,
                std::vector<double> k, std::vector<double> eps, double nu, double rho);

  /// Bilinear in (y, z); x and t are ignored.
  FlowSample sample(const Vec3& x, double t) const override;
  std::string describe() const override;

  std::size_t ny() const { return y_.size(); }
  std::size_t nz() const { return z_.size(); }
  bool empty() const { return y_.empty() || z_.empty(); }
  std::size_t index(std::size_t iy, std::size_t iz) const { return iz * y_.size() + iy; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& u_y() const { return u_y_; }
  const std::vector<double>& u_z() const { return u_z_; }
  const std::vector<double>& k() const { return k_; }
  const std::vector<double>& eps() const { return eps_; }
  double nu() const { return nu_; }
  double rho() const { return rho_; }

 private:
  std::vector<double> y_, z_, u_y_, u_z_, k_, eps_;
  double nu_ = 0.0;
  double rho_ = 0.0;
};

/// Sidecar path used when none is given: the CSV path with extension ".json".
std::filesystem::path default_sidecar(const std::filesystem::path& csv);

/// Reads the `y,z,u_y,u_z,k,eps` CSV plus its JSON sidecar. Throws ParseError
/// (with line number) or ValidationError.
FlowFieldGrid load_flow_csv(const std::filesystem::path& csv, const std::filesystem::path& sidecar = {});
/// Writes both files; numbers are printed with 17 significant digits.
/// Throws ValidationError for an empty grid.
void write_flow_csv(const FlowFieldGrid& grid, const std::filesystem::path& csv,
                    const std::filesystem::path& sidecar = {});

/// Samples any flow source onto a grid.
FlowFieldGrid rasterize(const FlowSource& flow, std::vector<double> y, std::vector<double> z);

/// Self-similar planar free jet issuing downwards (-z) from a slot at z = 0.
struct SyntheticJetParams {
  double inlet_speed = 400.0;       // U0 [m/s]
  double inlet_k = 1.6e4;           // k0 [m^2/s^2], 0.1 U0^2
  double inlet_eps = 1.7e9;         // eps0 [m^2/s^3], zeta ~ 1e-4 at the slot
  double slot_half_width = 1e-3;    // b0 [m]
  double virtual_origin = 1e-3;     // z0 [m]
  double spreading_rate = 0.1;      // S [-]
  double speed_decay = 0.5;         // centerline speed ~ lambda^-speed_decay
  double k_decay = 1.0;             // k ~ lambda^-k_decay
  double eps_decay = 2.5;           // eps ~ lambda^-eps_decay
  double ambient_fraction = 1e-2;   // k/k_c far from the axis
  double nu = 1.5e-5;               // [m^2/s]
  double rho = 1.0;                 // [kg/m^3]
  double y_half_extent = 0.05;      // domain |y| <= y_half_extent [m]
  double z_min = -0.3;              // domain z_min <= z <= z_max [m]
  double z_max = 0.01;

  /// Throws ValidationError unless every parameter is positive (z_min < 0 < z_max).
  void validate() const;
};

/// Analytic jet with lambda(z) = S (|z| + z0) / b0,
///   U_c = U0 min(1, lambda^-p_u), b(z) = b0 + S (|z| + z0),
///   u_z = -U_c g, u_y = S (y/b) U_c g, g = exp(-ln2 (y/b)^2),
///   k = k_c h, eps = eps_c h^2, h = delta + (1 - delta) g.
class SyntheticPlanarJet : public FlowSource {
 public:
  explicit SyntheticPlanarJet(const SyntheticJetParams& params = {});
  FlowSample sample(const Vec3& x, double t) const override;
  std::string describe() const override;
  const SyntheticJetParams& params() const { return params_; }

 private:
  SyntheticJetParams params_;
};

/// Homogeneous flow; never reports a domain exit.
class UniformFlow : public FlowSource {
 public:
  explicit UniformFlow(const FlowSample& sample) : sample_(sample) {}
  FlowSample sample(const Vec3&, double) const override { return sample_; }
  std::string describe() const override;

 private:
  FlowSample sample_;
};

/// How the spectrum parameter is chosen when localizing the fluctuation field.
enum class ZetaMode {
  Zero,  // one zeta = 0 parameter set for the whole flow
  Full,  // wavenumbers remapped to the local zeta at every evaluation
};

/// Inhomogeneous fluctuation field obtained by rescaling one dimensionless
/// realization with the local k, eps:
///   u'(x, t) = k^{1/2} u'_loc(eps/k^{3/2} x, eps/k t; zeta*),  k, eps at (x, t).
class GlobalFluctuationField {
 public:
  /// Throws DomainError in Zero mode when `ps` was not drawn with zeta = 0.
  GlobalFluctuationField(const FlowSource& flow, const ParameterSet& ps, ZetaMode mode = ZetaMode::Zero,
                         TemporalModel temporal = {});

  Vec3 operator()(const Vec3& x, double t) const { return at(flow_->sample(x, t), x, t); }
  /// Evaluation with an already interpolated flow sample at (x, t).
  Vec3 at(const FlowSample& sample, const Vec3& x, double t) const;

  const ParameterSet& parameters() const { return *ps_; }
  ZetaMode mode() const { return mode_; }

 private:
  const FlowSource* flow_;
  const ParameterSet* ps_;
  ZetaMode mode_;
  TemporalModel temporal_;
};

Vec3 eval_global_fluctuation(const Vec3& x, double t, const FlowSource& flow, const ParameterSet& ps,
                             ZetaMode mode = ZetaMode::Zero);

}  // namespace meltblow
