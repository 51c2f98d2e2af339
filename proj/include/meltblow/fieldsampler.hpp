#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meltblow/rng.hpp"
#include "meltblow/spectrum.hpp"
#include "meltblow/vec3.hpp"

namespace meltblow {

/// Which part of the complex surrogate Z exp(iRs) is used. Both give the
/// target covariance; one choice is fixed per parameter set.
enum class Branch { Real, Imag };

/// Frozen random numbers of one superposition copy l.
struct ModeParameters {
  Vec3 direction;                      // z^(l), unit vector
  std::array<double, 3> xi_wavenumber;  // R_xi,j, s_w-distributed
  std::array<double, 3> xi_quantile;    // uniform behind R_xi,j: |R| = Q_zeta(u)
  std::array<double, 3> xi_sign;        // +-1
  std::array<double, 3> xi_real;        // X_xi,j
  std::array<double, 3> xi_imag;        // Y_xi,j
  double psi_frequency;                 // R_psi
  double psi_real;                      // X_psi
  double psi_imag;                      // Y_psi
};

/// One realization of the local fluctuation field: the random numbers drawn
/// once, evaluated any number of times. Immutable after drawing.
class ParameterSet {
 public:
  static constexpr std::size_t kDefaultModes = 50;

  /// Draws `modes` copies from stream (seed, stream). Identical arguments give
  /// bit-identical sets. Throws DomainError for modes == 0.
  static ParameterSet draw(std::size_t modes, const SpectrumModel& model, std::uint64_t seed,
                           std::uint64_t stream = 0, Branch branch = Branch::Real);

  /// Same random numbers with the wavenumbers remapped through another
  /// spectrum's quantile function.
  ParameterSet retargeted(const SpectrumModel& model) const;

  std::size_t size() const { return modes_.size(); }
  std::span<const ModeParameters> modes() const { return modes_; }
  const ModeParameters& mode(std::size_t l) const { return modes_.at(l); }
  Branch branch() const { return branch_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  double zeta() const { return zeta_; }

  friend bool operator==(const ParameterSet&, const ParameterSet&);

 private:
  std::vector<ModeParameters> modes_;
  Branch branch_ = Branch::Real;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  double zeta_ = 0.0;
};

bool operator==(const ModeParameters& a, const ModeParameters& b);

/// Dimensionless flow parameters at the reference point.
struct LocalFrame {
  double zeta = 0.0;
  Vec3 mean_velocity{};  // u_bar / sqrt(k)
  double t_T = 0.212;
};

/// Uniform direction on the unit sphere by normalizing a normal 3-vector.
Vec3 sample_sphere(RandomStream& rng);

/// Signed wavenumber with density s_w, by branch composition: one uniform
/// picks the branch with its exact mass, a second inverts the branch CDF,
/// a third picks the sign.
double sample_wavenumber(const SpectrumModel& model, RandomStream& rng);

/// Re or Im of (X + iY) exp(i R s) for component j of copy l.
double eval_surrogate_w(double s, std::size_t l, int j, const ParameterSet& ps);

/// xi^(l)(x) = (I - z z^T) w(x . z); orthogonal to z^(l).
Vec3 eval_spatial_field(const Vec3& x, std::size_t l, const ParameterSet& ps);

/// psi^(l)(t), stationary with covariance phi.
double eval_time_process(double t, std::size_t l, const ParameterSet& ps, const TemporalModel& tm);

/// u'_loc(x, t) = N^{-1/2} sum_l xi^(l)(x - u_bar t) psi^(l)(t).
/// Pure: repeated calls with equal arguments return bit-identical vectors.
Vec3 eval_local_fluctuation(const Vec3& x, double t, const ParameterSet& ps, const LocalFrame& frame);

}  // namespace meltblow
