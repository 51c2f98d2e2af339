#include "meltblow/spectrum.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

constexpr int kFirstA = 4;  // a_j, j = 4..6
constexpr int kFirstB = 7;  // b_j, j = 7..9

// Solves p(s) = target for s in [lo, hi] with p increasing; Newton steps that
// leave the bracket are replaced by bisection.
template <class F, class DF>
double safeguarded_newton(F&& p, DF&& dp, double target, double lo, double hi, double guess) {
  double s = guess;
  if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = p(s) - target;
    if (g == 0.0) return s;
    if (g > 0.0)
      hi = s;
    else
      lo = s;
    const double slope = dp(s);
    double next = slope > 0.0 ? s - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(s)) return next;
    s = next;
  }
  return s;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// c * k^p
struct PowerTerm {
  double coefficient;
  double power;
};

// int_K^inf h(k) sin(r k) dk for h a finite sum of power terms with negative
// powers, by repeated integration by parts. Accurate when r K >> 1.
double oscillatory_tail(const std::vector<PowerTerm>& h, double K, double r) {
  auto derivative = [&](int order) {
    double sum = 0.0;
    for (const auto& term : h) {
      double c = term.coefficient;
      for (int i = 0; i < order; ++i) c *= term.power - i;
      sum += c * std::pow(K, term.power - order);
    }
    return sum;
  };
  const double c = std::cos(r * K);
  const double s = std::sin(r * K);
  double total = 0.0;
  double sign = 1.0;
  double rpow = r;
  for (int m = 0; m < 3; ++m) {
    total += sign * (derivative(2 * m) * c / rpow - derivative(2 * m + 1) * s / (rpow * r));
    rpow *= r * r;
    sign = -sign;
  }
  return total;
}

}  // namespace

SpectrumCoefficients make_spectrum_coefficients(const std::array<Rational, 3>& a, const std::array<Rational, 3>& b,
                                                Rational kolmogorov) {
  if (a[0] + a[1] + a[2] != Rational(1) || b[0] + b[1] + b[2] != Rational(1))
    throw DomainError("spectrum coefficients: a_j and b_j must each sum to 1");
  if (kolmogorov <= Rational(0)) throw DomainError("spectrum coefficients: C_K must be positive");

  SpectrumCoefficients c{a, b, kolmogorov, Rational(3, 2), Rational(3, 4), Rational(3, 2), Rational(3, 4)};
  for (int i = 0; i < 3; ++i) {
    const int ja = kFirstA + i;
    const int jb = kFirstB + i;
    c.a_hat1 += a[i] / Rational(ja + 1);
    c.a_hat2 -= a[i] / Rational(ja + 3);
    c.b_hat1 -= b[i] / Rational(jb - 1);
    c.b_hat2 += b[i] / Rational(jb - 3);
  }
  return c;
}

SpectrumCoefficients reduced_coefficients() {
  return make_spectrum_coefficients({Rational(230, 9), Rational(-391, 9), Rational(170, 9)},
                                    {Rational(209, 9), Rational(-352, 9), Rational(152, 9)}, Rational(1, 2));
}

double critical_zeta(const SpectrumCoefficients& c) {
  const Rational ck = c.kolmogorov;
  const Rational d1 = c.b_hat1 - c.a_hat1;
  const Rational denom = Rational(2) * ck * ck * ck * (c.b_hat2 - c.a_hat2) * d1 * d1;
  return 1.0 / to_double(denom);
}

TransitionWavenumbers solve_transition_wavenumbers(double zeta, const SpectrumCoefficients& c,
                                                   const SolverOptions& options) {
  const double zeta_crit = critical_zeta(c);
  if (!(zeta >= 0.0) || !(zeta < zeta_crit)) {
    std::ostringstream msg;
    msg << "zeta = " << zeta << " outside admissible range [0, " << zeta_crit << ")";
    throw DomainError(msg.str());
  }
  const double ck = to_double(c.kolmogorov);
  const double a1 = to_double(c.a_hat1);
  const double a2 = to_double(c.a_hat2);
  const double b1 = to_double(c.b_hat1);
  const double b2 = to_double(c.b_hat2);

  TransitionWavenumbers out;
  if (zeta == 0.0) {
    out.kappa1 = std::pow(ck * a1, 1.5);
    return out;
  }

  // With x = k1^{-2/3}, y = k2^{-2/3} the first equation is linear:
  // x(y) = (1/C_K + b1 y)/a1. The second becomes h(y) = 0 with
  // h(y) = b2 - a2 (y/x)^2 - y^2/(2 C_K zeta), positive at y = 0 and
  // negative at the coincidence point y_c where x = y.
  const double inv_rhs = 2.0 * ck * zeta;
  auto x_of = [&](double y) { return (1.0 / ck + b1 * y) / a1; };
  auto h = [&](double y) {
    const double q = y / x_of(y);
    return b2 - a2 * q * q - y * y / inv_rhs;
  };
  auto dh = [&](double y) {
    const double x = x_of(y);
    const double dq = (x - y * b1 / a1) / (x * x);
    return -2.0 * a2 * (y / x) * dq - 2.0 * y / inv_rhs;
  };
  auto residual2 = [&](double y) { return inv_rhs * h(y) / (y * y); };

  double lo = 0.0;
  double hi = 1.0 / (ck * (a1 - b1));
  double y = std::min(std::sqrt(inv_rhs * b2), 0.5 * hi);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double hy = h(y);
    if (std::abs(residual2(y)) < options.tolerance) break;
    if (hy > 0.0)
      lo = y;
    else
      hi = y;
    const double slope = dh(y);
    double next = slope != 0.0 ? y - hy / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y) break;
    y = next;
  }

  const double x = x_of(y);
  out.kappa1 = std::pow(x, -1.5);
  out.kappa2 = std::pow(y, -1.5);
  out.iterations = it;
  out.residual1 = ck * (a1 * std::pow(out.kappa1, -2.0 / 3.0) - b1 * std::pow(*out.kappa2, -2.0 / 3.0)) - 1.0;
  out.residual2 = inv_rhs * (-a2 * std::pow(out.kappa1, 4.0 / 3.0) + b2 * std::pow(*out.kappa2, 4.0 / 3.0)) - 1.0;
  if (!(std::abs(out.residual1) < options.tolerance) || !(std::abs(out.residual2) < options.tolerance)) {
    std::ostringstream msg;
    msg << "transition wavenumbers did not converge for zeta = " << zeta << " after " << it
        << " iterations (residuals " << out.residual1 << ", " << out.residual2 << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

TransitionWavenumbers solve_transition_wavenumbers(double zeta, const SolverOptions& options) {
  return solve_transition_wavenumbers(zeta, reduced_coefficients(), options);
}

SpectrumModel::SpectrumModel(double zeta, const SpectrumCoefficients& coeffs, const SolverOptions& options)
    : coeffs_(coeffs),
      solution_(solve_transition_wavenumbers(zeta, coeffs, options)),
      zeta_(zeta),
      kappa1_(solution_.kappa1),
      kappa2_(solution_.kappa2),
      ck_(to_double(coeffs.kolmogorov)) {
  for (int i = 0; i < 3; ++i) {
    a_[i] = to_double(coeffs_.a[i]);
    b_[i] = to_double(coeffs_.b[i]);
  }
  const double x = std::pow(kappa1_, -2.0 / 3.0);
  const double y = kappa2_ ? std::pow(*kappa2_, -2.0 / 3.0) : 0.0;
  const double a_sum = to_double(coeffs_.a_hat1) - 1.5;         // sum a_j/(j+1)
  const double b_sum = 1.5 - to_double(coeffs_.b_hat1);         // sum b_j/(j-1)
  masses_ = {ck_ * x * a_sum, 1.5 * ck_ * (x - y), ck_ * y * b_sum};
}

double SpectrumModel::energy(double kappa) const {
  if (!(kappa >= 0.0)) throw DomainError("energy spectrum: wavenumber must be non-negative");
  if (kappa < kappa1_) {
    const double s = kappa / kappa1_;
    const double s4 = s * s * s * s;
    return ck_ * std::pow(kappa1_, -5.0 / 3.0) * s4 * (a_[0] + s * (a_[1] + s * a_[2]));
  }
  if (!kappa2_ || kappa <= *kappa2_) return ck_ * std::pow(kappa, -5.0 / 3.0);
  const double t = *kappa2_ / kappa;
  const double t7 = std::pow(t, 7);
  return ck_ * std::pow(*kappa2_, -5.0 / 3.0) * t7 * (b_[0] + t * (b_[1] + t * b_[2]));
}

std::array<double, 3> SpectrumModel::branch_masses() const { return masses_; }

double SpectrumModel::cumulative_energy(double kappa) const {
  if (!(kappa >= 0.0)) throw DomainError("cumulative energy: wavenumber must be non-negative");
  if (std::isinf(kappa)) return masses_[0] + masses_[1] + masses_[2];
  const double x = std::pow(kappa1_, -2.0 / 3.0);
  if (kappa < kappa1_) {
    const double s = kappa / kappa1_;
    const double s5 = std::pow(s, 5);
    return ck_ * x * s5 * (a_[0] / 5.0 + s * (a_[1] / 6.0 + s * a_[2] / 7.0));
  }
  if (!kappa2_ || kappa <= *kappa2_) return masses_[0] + 1.5 * ck_ * (x - std::pow(kappa, -2.0 / 3.0));
  const double t = *kappa2_ / kappa;
  const double t6 = std::pow(t, 6);
  const double above = ck_ * std::pow(*kappa2_, -2.0 / 3.0) * t6 * (b_[0] / 6.0 + t * (b_[1] / 7.0 + t * b_[2] / 8.0));
  return masses_[0] + masses_[1] + masses_[2] - above;
}

double SpectrumModel::second_moment() const {
  if (!kappa2_) return std::numeric_limits<double>::infinity();
  const double a2 = to_double(coeffs_.a_hat2);
  const double b2 = to_double(coeffs_.b_hat2);
  return ck_ * (-a2 * std::pow(kappa1_, 4.0 / 3.0) + b2 * std::pow(*kappa2_, 4.0 / 3.0));
}

double SpectrumModel::branch_quantile(int branch, double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("branch quantile: u must lie in (0, 1)");
  switch (branch) {
    case 0: {
      // int_0^s sum a_j s^j = sum a_j s^{j+1}/(j+1), normalized.
      auto p = [&](double s) {
        const double s5 = std::pow(s, 5);
        return s5 * (a_[0] / 5.0 + s * (a_[1] / 6.0 + s * a_[2] / 7.0));
      };
      auto dp = [&](double s) { return std::pow(s, 4) * (a_[0] + s * (a_[1] + s * a_[2])); };
      const double total = p(1.0);
      return kappa1_ * safeguarded_newton(p, dp, u * total, 0.0, 1.0, std::pow(u, 0.2));
    }
    case 1: {
      const double x = std::pow(kappa1_, -2.0 / 3.0);
      const double y = kappa2_ ? std::pow(*kappa2_, -2.0 / 3.0) : 0.0;
      return std::pow(x - u * (x - y), -1.5);
    }
    case 2: {
      if (!kappa2_) throw DomainError("branch quantile: no upper branch when zeta == 0");
      // With t = k2/k, the mass above k is proportional to q(t) = sum b_j t^{j-1}/(j-1).
      auto q = [&](double t) {
        const double t6 = std::pow(t, 6);
        return t6 * (b_[0] / 6.0 + t * (b_[1] / 7.0 + t * b_[2] / 8.0));
      };
      auto dq = [&](double t) { return std::pow(t, 5) * (b_[0] + t * (b_[1] + t * b_[2])); };
      const double total = q(1.0);
      const double v = 1.0 - u;
      const double t = safeguarded_newton(q, dq, v * total, 0.0, 1.0, std::pow(v, 1.0 / 6.0));
      return *kappa2_ / t;
    }
    default:
      throw DomainError("branch quantile: branch index must be 0, 1 or 2");
  }
}

double SpectrumModel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0, 1)");
  const double total = masses_[0] + masses_[1] + masses_[2];
  double target = u * total;
  auto clamp_open = [](double v) {
    return std::min(std::max(v, std::numeric_limits<double>::min()), 1.0 - std::numeric_limits<double>::epsilon());
  };
  if (target < masses_[0]) return branch_quantile(0, clamp_open(target / masses_[0]));
  target -= masses_[0];
  if (target < masses_[1] || masses_[2] == 0.0) return branch_quantile(1, clamp_open(target / masses_[1]));
  target -= masses_[1];
  return branch_quantile(2, clamp_open(target / masses_[2]));
}

double energy_spectrum(double kappa, const SpectrumModel& model) { return model.energy(kappa); }

double spectral_density_sw(double kappa, const SpectrumModel& model) { return model.density_sw(kappa); }

double correlation_trace(double r, const SpectrumModel& model) {
  if (!(r >= 0.0)) throw DomainError("correlation trace: separation must be non-negative");
  if (r == 0.0) return 2.0 * model.cumulative_energy(std::numeric_limits<double>::infinity());

  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 21>;
  const double period = std::numbers::pi / r;
  double total = 0.0;
  double error = 0.0;
  double magnitude = 0.0;
  auto integrand = [&](double k) { return model.energy(k) * sinc(k * r); };

  // Panels grow geometrically until they reach half a period of sin(k r).
  auto integrate_interval = [&](double lo, double hi) {
    double p = lo;
    while (p < hi) {
      const double width = std::min(p > 0.0 ? p : hi - lo, period);
      const double q = std::min(p + width, hi);
      double err = 0.0;
      double l1 = 0.0;
      total += Quadrature::integrate(integrand, p, q, 15, 1e-12, &err, &l1);
      // Boost reports leaf errors on [-1, 1]; every leaf is at most as wide as the panel.
      error += err * 0.5 * (q - p);
      magnitude += l1;
      p = q;
    }
  };

  const double ck = to_double(model.coefficients().kolmogorov);
  std::vector<PowerTerm> tail;  // E(k)/(k r) beyond the last breakpoint
  double last_break = model.kappa1();
  integrate_interval(0.0, model.kappa1());
  if (auto k2 = model.kappa2()) {
    integrate_interval(model.kappa1(), *k2);
    last_break = *k2;
    for (int i = 0; i < 3; ++i) {
      const int j = kFirstB + i;
      const double c = ck * std::pow(*k2, j - 5.0 / 3.0) * to_double(model.coefficients().b[i]) / r;
      tail.push_back({c, -static_cast<double>(j) - 1.0});
    }
  } else {
    tail.push_back({ck / r, -8.0 / 3.0});
  }
  const double cutoff = std::max(last_break, 200.0 / r);
  integrate_interval(last_break, cutoff);
  total += oscillatory_tail(tail, cutoff, r);

  if (!(error <= 1e-8 * magnitude + 1e-300)) {
    std::ostringstream msg;
    msg << "correlation trace quadrature did not converge at r = " << r << " (error estimate " << error << ")";
    throw NumericalError(msg.str());
  }
  return 2.0 * total;
}

double TemporalModel::correlation(double t) const { return std::exp(-t * t / (2.0 * t_T * t_T)); }

double TemporalModel::spectral_density(double omega) const {
  return t_T / std::sqrt(2.0 * std::numbers::pi) * std::exp(-t_T * t_T * omega * omega / 2.0);
}

double temporal_correlation(double t, const TemporalModel& model) {
  if (!(t >= 0.0)) throw DomainError("temporal correlation: time must be non-negative");
  return model.correlation(t);
}

}  // namespace meltblow
