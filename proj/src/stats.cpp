#include "meltblow/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "meltblow/errors.hpp"

namespace meltblow {

namespace {

const boost::math::normal kStdNormal;

double phi_inv(double p) { return boost::math::quantile(kStdNormal, p); }
double upper_tail(double z) { return boost::math::cdf(boost::math::complement(kStdNormal, z)); }

double poly(std::initializer_list<double> c, double x) {
  // c[0] + c[1] x + ...
  double r = 0.0;
  for (auto it = std::rbegin(c); it != std::rend(c); ++it) r = r * x + *it;
  return r;
}

void check_size(std::size_t n) {
  if (n < 3 || n > 2000) throw DomainError("Shapiro-Wilk: sample size must lie in [3, 2000], got " + std::to_string(n));
}

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

// Sum of squared deviations; throws for an effectively constant sample.
double centered_ss(const std::vector<double>& s) {
  const double range = s.back() - s.front();
  const double scale = std::max(std::abs(s.front()), std::abs(s.back()));
  if (!(range > 1e-12 * scale) || range == 0.0) throw ValidationError("normality test: sample has zero variance");
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  return ss;
}

// Lower-half coefficients a_1..a_{n/2} (positive, applied to x_(n+1-i) - x_(i)).
std::vector<double> swilk_coefficients(std::size_t n) {
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
    return a;
  }
  const double an = static_cast<double>(n);
  double summ2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    a[i] = -phi_inv((static_cast<double>(i + 1) - 0.375) / (an + 0.25));  // m_(n+1-i) > 0
    summ2 += a[i] * a[i];
  }
  summ2 *= 2.0;
  const double ssumm2 = std::sqrt(summ2);
  const double rsn = 1.0 / std::sqrt(an);
  const double a1 = poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn) + a[0] / ssumm2;
  std::size_t first;
  double fac;
  if (n > 5) {
    const double a2 = poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn) + a[1] / ssumm2;
    fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
    a[0] = a1;
    a[1] = a2;
    first = 2;
  } else {
    fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
    a[0] = a1;
    first = 1;
  }
  for (std::size_t i = first; i < half; ++i) a[i] /= fac;
  return a;
}

double weighted_w(const std::vector<double>& sorted, const std::vector<double>& a) {
  const std::size_t n = sorted.size();
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += a[i] * (sorted[n - 1 - i] - sorted[i]);
  const double w = num * num / centered_ss(sorted);
  return std::min(w, 1.0);
}

// Biased moment kurtosis m4 / m2^2.
double kurtosis(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  return m4 / (m2 * m2);
}

// Cholesky on a small symmetric matrix; false when not numerically positive definite.
bool positive_definite(std::vector<double> m, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = m[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= m[j * d + k] * m[j * d + k];
    if (!(diag > 1e-10)) return false;
    const double l = std::sqrt(diag);
    m[j * d + j] = l;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = m[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= m[i * d + k] * m[j * d + k];
      m[i * d + j] = s / l;
    }
  }
  return true;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double shapiro_wilk_p_value(double w, std::size_t n) {
  check_size(n);
  if (n == 3) {
    const double p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(std::clamp(w, 0.75, 1.0))) - std::numbers::pi / 3.0);
    return std::clamp(p, 0.0, 1.0);
  }
  if (w >= 1.0) return 1.0;
  double y = std::log1p(-w);
  const double an = static_cast<double>(n);
  double m, s;
  if (n <= 11) {
    const double gamma = poly({-2.273, 0.459}, an);
    if (y >= gamma) return 1e-19;
    y = -std::log(gamma - y);
    m = poly({0.5440, -0.39978, 0.025054, -0.0006714}, an);
    s = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
  } else {
    const double xx = std::log(an);
    m = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, xx);
    s = std::exp(poly({-0.4803, -0.082676, 0.0030302}, xx));
  }
  return upper_tail((y - m) / s);
}

ShapiroWilkResult shapiro_wilk(std::span<const double> x) {
  check_size(x.size());
  const auto s = sorted_copy(x);
  const double w = weighted_w(s, swilk_coefficients(s.size()));
  return {w, shapiro_wilk_p_value(w, s.size())};
}

double shapiro_francia_w(std::span<const double> x) {
  check_size(x.size());
  const auto s = sorted_copy(x);
  const std::size_t n = s.size();
  std::vector<double> m(n / 2);
  double mm = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = -phi_inv((static_cast<double>(i + 1) - 0.375) / (static_cast<double>(n) + 0.25));
    mm += 2.0 * m[i] * m[i];
  }
  const double norm_m = std::sqrt(mm);
  for (double& v : m) v /= norm_m;
  return weighted_w(s, m);
}

std::vector<double> SampleMatrix::column(std::size_t j) const {
  std::vector<double> c(n_);
  for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
  return c;
}

void SampleMatrix::validate() const {
  if (n_ < 3) throw DomainError("sample matrix: at least 3 observations are required");
  if (d_ == 0) throw DomainError("sample matrix: at least one variate is required");
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("sample matrix: non-finite entry");
}

NormalityResult royston_h(const SampleMatrix& s, RoystonVariant variant) {
  s.validate();
  const std::size_t n = s.n(), d = s.d();
  check_size(n);
  NormalityResult res;
  res.w.resize(d);
  res.z.resize(d);

  std::vector<std::vector<double>> cols(d);
  double sum_r = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    cols[j] = s.column(j);
    const bool francia = variant == RoystonVariant::Matlab && kurtosis(cols[j]) > 3.0;
    const double w = francia ? shapiro_francia_w(cols[j]) : shapiro_wilk(cols[j]).w;
    const double p = shapiro_wilk_p_value(w, n);
    res.w[j] = w;
    res.z[j] = -phi_inv(std::clamp(p, 1e-300, 1.0 - 1e-16));
    const double q = phi_inv(std::max(p / 2.0, 1e-300));
    sum_r += q * q;
  }

  // Correlation matrix.
  std::vector<double> mean(d, 0.0), sd(d, 0.0), corr(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (double v : cols[j]) mean[j] += v;
    mean[j] /= static_cast<double>(n);
    for (double v : cols[j]) sd[j] += (v - mean[j]) * (v - mean[j]);
    sd[j] = std::sqrt(sd[j]);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += (cols[i][k] - mean[i]) * (cols[j][k] - mean[j]);
      c = i == j ? 1.0 : std::clamp(c / (sd[i] * sd[j]), -1.0, 1.0);
      corr[i * d + j] = corr[j * d + i] = c;
    }
  if (!positive_definite(corr, d)) throw ValidationError("Royston test: correlation matrix is rank deficient");

  const double ln = std::log(static_cast<double>(n));
  const double u = 0.715;
  const double v = 0.21364 + 0.015124 * ln * ln - 0.0018034 * ln * ln * ln;
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = corr[i * d + j];
      total += std::pow(c, 5) * (1.0 - u * std::pow(1.0 - c, u) / v);
    }
  total -= static_cast<double>(d);
  const double dd = static_cast<double>(d);
  const double mean_c = d > 1 ? total / (dd * dd - dd) : 0.0;
  res.equivalent_df = dd / (1.0 + (dd - 1.0) * mean_c);
  res.statistic = res.equivalent_df * sum_r / dd;
  const boost::math::chi_squared chi2(res.equivalent_df);
  res.p_value = boost::math::cdf(boost::math::complement(chi2, res.statistic));
  return res;
}

CovarianceEstimate empirical_covariance(const SampleMatrix& a, const SampleMatrix& b) {
  const std::size_t n = a.n();
  if (b.n() != n) throw DomainError("covariance: sample counts differ");
  if (n < 2) throw DomainError("covariance: at least 2 samples are required");
  const std::size_t p = a.d(), q = b.d();
  CovarianceEstimate est;
  est.rows = p;
  est.cols = q;
  est.samples = n;
  est.value.assign(p * q, 0.0);
  est.standard_error.assign(p * q, std::numeric_limits<double>::infinity());

  const double dn = static_cast<double>(n);
  std::vector<double> ma(p, 0.0), mb(q, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < p; ++i) ma[i] += a(k, i);
    for (std::size_t j = 0; j < q; ++j) mb[j] += b(k, j);
  }
  for (double& m : ma) m /= dn;
  for (double& m : mb) m /= dn;

  // On centered data the sums of a and b vanish, so the leave-one-out estimate
  // is C_(k) = (S - a_k b_k - a_k b_k / (n-1)) / (n-2).
  std::vector<double> sab(p * q, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) sab[i * q + j] += (a(k, i) - ma[i]) * (b(k, j) - mb[j]);
  for (std::size_t c = 0; c < p * q; ++c) est.value[c] = sab[c] / (dn - 1.0);
  const std::size_t diag = std::min(p, q);
  for (std::size_t i = 0; i < diag; ++i) est.trace += est.value[i * q + i];

  if (n < 3) {
    est.trace_standard_error = std::numeric_limits<double>::infinity();
    return est;
  }
  std::vector<double> sum(p * q, 0.0), sum2(p * q, 0.0);
  double tsum = 0.0, tsum2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double tr = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) {
        const double x = (a(k, i) - ma[i]) * (b(k, j) - mb[j]);
        const double loo = (sab[i * q + j] - x * (dn / (dn - 1.0))) / (dn - 2.0);
        sum[i * q + j] += loo;
        sum2[i * q + j] += loo * loo;
        if (i == j) tr += loo;
      }
    tsum += tr;
    tsum2 += tr * tr;
  }
  auto jack_se = [&](double s, double s2) {
    const double mean = s / dn;
    const double var = std::max(0.0, s2 / dn - mean * mean);
    return std::sqrt((dn - 1.0) * var);
  };
  for (std::size_t c = 0; c < p * q; ++c) est.standard_error[c] = jack_se(sum[c], sum2[c]);
  est.trace_standard_error = jack_se(tsum, tsum2);
  return est;
}

CovarianceEstimate empirical_covariance(std::span<const Vec3> a, std::span<const Vec3> b) {
  SampleMatrix ma(a.size(), 3), mb(b.size(), 3);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (int i = 0; i < 3; ++i) ma(k, i) = a[k][i];
  for (std::size_t k = 0; k < b.size(); ++k)
    for (int i = 0; i < 3; ++i) mb(k, i) = b[k][i];
  return empirical_covariance(ma, mb);
}

std::vector<SpaceTimePoint> line_points(std::size_t d, double spacing, double time_step) {
  std::vector<SpaceTimePoint> pts(d);
  const double c = spacing / std::sqrt(3.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double s = static_cast<double>(i);
    pts[i] = {{s * c, s * c, s * c}, s * time_step};
  }
  return pts;
}

double RejectionTable::standard_error(std::size_t i, std::size_t j) const {
  const double f = (*this)(i, j);
  return replications ? std::sqrt(f * (1.0 - f) / static_cast<double>(replications)) : 0.0;
}

double RejectionTable::at(std::size_t n_modes, std::size_t d) const {
  const auto i = std::find(modes.begin(), modes.end(), n_modes);
  const auto j = std::find(variates.begin(), variates.end(), d);
  if (i == modes.end() || j == variates.end()) throw DomainError("rejection table: no cell for the requested (N, d)");
  return (*this)(static_cast<std::size_t>(i - modes.begin()), static_cast<std::size_t>(j - variates.begin()));
}

RejectionTable rejection_frequency_experiment(const RejectionExperimentConfig& cfg) {
  if (cfg.component < 0 || cfg.component > 2) throw DomainError("rejection experiment: component must be 0, 1 or 2");
  if (cfg.replications > 0 && cfg.sample_size < 3)
    throw DomainError("rejection experiment: sample size must be at least 3");
  RejectionTable table;
  table.modes = cfg.modes;
  table.variates = cfg.variates;
  table.replications = cfg.replications;
  table.frequency.assign(cfg.modes.size() * cfg.variates.size(), 0.0);
  if (cfg.replications == 0) return table;

  const SpectrumModel model(cfg.frame.zeta);
  for (std::size_t a = 0; a < cfg.modes.size(); ++a)
    for (std::size_t b = 0; b < cfg.variates.size(); ++b) {
      const std::size_t modes = cfg.modes[a], d = cfg.variates[b];
      const auto points = line_points(d, cfg.spacing, cfg.time_step);
      const std::uint64_t cell_seed = mix64(mix64(mix64(cfg.seed) ^ modes) ^ (d << 32));
      std::vector<char> rejected(cfg.replications, 0);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        SampleMatrix m(cfg.sample_size, d);
        for (std::size_t r; (r = next.fetch_add(1)) < cfg.replications;) {
          for (std::size_t k = 0; k < cfg.sample_size; ++k) {
            const auto ps = ParameterSet::draw(modes, model, cell_seed, r * cfg.sample_size + k);
            for (std::size_t i = 0; i < d; ++i)
              m(k, i) = eval_local_fluctuation(points[i].x, points[i].t, ps, cfg.frame)[cfg.component];
          }
          rejected[r] = royston_h(m, cfg.variant).p_value < cfg.alpha;
        }
      };
      const unsigned nt = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.replications)));
      std::vector<std::thread> pool;
      for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      std::size_t count = 0;
      for (char c : rejected) count += c;
      table.frequency[a * cfg.variates.size() + b] = static_cast<double>(count) / static_cast<double>(cfg.replications);
    }
  return table;
}

void write_rejection_csv(const RejectionTable& table, std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "N";
  for (std::size_t d : table.variates) out << ",d" << d;
  out << '\n';
  for (std::size_t i = 0; i < table.modes.size(); ++i) {
    out << table.modes[i];
    for (std::size_t j = 0; j < table.variates.size(); ++j) out << ',' << format_number(table(i, j));
    out << '\n';
  }
}

}  // namespace meltblow
