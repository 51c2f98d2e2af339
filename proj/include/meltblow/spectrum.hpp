#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <boost/rational.hpp>

namespace meltblow {

using Rational = boost::rational<std::int64_t>;

/// Coefficients of the piecewise energy spectrum
///
///   E(k) = C_K k1^{-5/3} sum_{j=4..6} a_j (k/k1)^j     k < k1
///        = C_K k^{-5/3}                                 k1 <= k <= k2
///        = C_K k2^{-5/3} sum_{j=7..9} b_j (k/k2)^{-j}   k > k2
///
/// together with the reduced sums that turn the two moment conditions into a
/// 2x2 nonlinear system for (k1, k2). Everything is held as exact rationals.
struct SpectrumCoefficients {
  std::array<Rational, 3> a;  // a4, a5, a6
  std::array<Rational, 3> b;  // b7, b8, b9
  Rational kolmogorov;        // C_K
  Rational a_hat1;
  Rational a_hat2;
  Rational b_hat1;
  Rational b_hat2;
};

/// Builds coefficients from a_j, b_j and C_K. Throws DomainError unless
/// sum(a) == 1, sum(b) == 1 and C_K > 0.
SpectrumCoefficients make_spectrum_coefficients(const std::array<Rational, 3>& a,
                                                const std::array<Rational, 3>& b, Rational kolmogorov);

/// The standard regularity parameters (a4 = 230/9, ..., C_K = 1/2) and their reduced sums.
SpectrumCoefficients reduced_coefficients();

inline double to_double(const Rational& q) { return boost::rational_cast<double>(q); }

/// Upper bound on the dimensionless viscosity for which 0 < k1 < k2 exists.
double critical_zeta(const SpectrumCoefficients& coeffs);

struct SolverOptions {
  double tolerance = 1e-12;  // on the relative residuals of both equations
  int max_iterations = 200;
};

struct TransitionWavenumbers {
  double kappa1 = 0.0;
  /// Empty means k2 = infinity (zeta == 0).
  std::optional<double> kappa2;
  double residual1 = 0.0;
  double residual2 = 0.0;
  int iterations = 0;
};

/// Solves the moment conditions for (k1, k2).
/// Throws DomainError for zeta outside [0, zeta_crit) and NumericalError
/// when the iteration budget is exhausted.
TransitionWavenumbers solve_transition_wavenumbers(double zeta, const SpectrumCoefficients& coeffs,
                                                   const SolverOptions& options = {});
TransitionWavenumbers solve_transition_wavenumbers(double zeta, const SolverOptions& options = {});

/// Energy spectrum for a fixed dimensionless viscosity. Immutable.
class SpectrumModel {
 public:
  explicit SpectrumModel(double zeta, const SpectrumCoefficients& coeffs = reduced_coefficients(),
                         const SolverOptions& options = {});

  double zeta() const { return zeta_; }
  double kappa1() const { return kappa1_; }
  std::optional<double> kappa2() const { return kappa2_; }
  bool infinite_tail() const { return !kappa2_.has_value(); }
  const SpectrumCoefficients& coefficients() const { return coeffs_; }
  const TransitionWavenumbers& solution() const { return solution_; }

  /// E(k). Throws DomainError for k < 0.
  double energy(double kappa) const;
  /// s_w(k) = E(|k|)/2, a probability density on the real line.
  double density_sw(double kappa) const { return 0.5 * energy(kappa < 0.0 ? -kappa : kappa); }

  /// Exact masses of the three branches [0,k1), [k1,k2], (k2,inf).
  std::array<double, 3> branch_masses() const;
  /// Closed-form int_0^k E.
  double cumulative_energy(double kappa) const;
  /// Closed-form int_0^inf k^2 E; +inf when zeta == 0.
  double second_moment() const;
  /// Inverse of cumulative_energy, normalized by the total mass: returns k with
  /// P(|R| <= k) = u for u in (0,1).
  double quantile(double u) const;

  /// Inverse CDF restricted to one branch (0, 1 or 2), u in (0,1).
  double branch_quantile(int branch, double u) const;

 private:
  SpectrumCoefficients coeffs_;
  TransitionWavenumbers solution_;
  double zeta_;
  double kappa1_;
  std::optional<double> kappa2_;
  double ck_;
  std::array<double, 3> a_;
  std::array<double, 3> b_;
  std::array<double, 3> masses_;
};

double energy_spectrum(double kappa, const SpectrumModel& model);
double spectral_density_sw(double kappa, const SpectrumModel& model);

/// tr gamma(r e) = 2 int_0^inf E(k) sin(kr)/(kr) dk, evaluated by adaptive
/// Gauss-Kronrod panels with an asymptotic tail. Throws DomainError for r < 0.
double correlation_trace(double r, const SpectrumModel& model);

/// Gaussian decay of temporal correlations, phi(t) = exp(-t^2 / (2 t_T^2)).
struct TemporalModel {
  double t_T = 0.212;

  double correlation(double t) const;
  /// Fourier transform of phi; integrates to 1 over the real line.
  double spectral_density(double omega) const;
};

/// Throws DomainError for t < 0.
double temporal_correlation(double t, const TemporalModel& model);

}  // namespace meltblow
