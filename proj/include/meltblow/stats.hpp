#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "meltblow/fieldsampler.hpp"
#include "meltblow/vec3.hpp"

namespace meltblow {

struct ShapiroWilkResult {
  double w = 1.0;
  double p_value = 1.0;  // upper tail of the normalized statistic
};

/// Shapiro-Wilk W with Royston's approximations (Applied Statistics AS R94).
/// Throws DomainError unless 3 <= n <= 2000 and ValidationError for a
/// (numerically) constant sample.
ShapiroWilkResult shapiro_wilk(std::span<const double> x);

/// Shapiro-Francia W' (normalized scores as weights), same input rules.
double shapiro_francia_w(std::span<const double> x);

/// Royston's normalizing transformation of W to a p-value for sample size n.
double shapiro_wilk_p_value(double w, std::size_t n);

/// n x d matrix of observations, row-major.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), values_(n * d, 0.0) {}

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  std::vector<double> column(std::size_t j) const;
  std::span<const double> values() const { return values_; }

  /// Throws DomainError for n < 3 or d == 0, ValidationError for non-finite entries.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

/// How the per-variate statistic is formed.
enum class RoystonVariant {
  ShapiroWilk,  // W from AS R94 for every variate
  Matlab,       // Shapiro-Francia W' for columns with kurtosis > 3, as in the widely used MATLAB Roystest
};

struct NormalityResult {
  double statistic = 0.0;             // H
  double p_value = 1.0;
  double equivalent_df = 0.0;         // e
  std::vector<double> w;              // per-variate W (or W')
  std::vector<double> z;              // per-variate normalized statistic
};

/// Royston's H test of multivariate normality. Throws DomainError for n < 3,
/// ValidationError for a constant column or a rank-deficient correlation matrix.
NormalityResult royston_h(const SampleMatrix& s, RoystonVariant variant = RoystonVariant::ShapiroWilk);

/// Cross-covariance Cov(a, b) between two vector-valued samples.
struct CovarianceEstimate {
  std::size_t rows = 0;               // dimension of a
  std::size_t cols = 0;               // dimension of b
  std::size_t samples = 0;
  std::vector<double> value;          // rows x cols, unbiased
  std::vector<double> standard_error; // jackknife
  double trace = 0.0;                 // sum of the diagonal (rows == cols)
  double trace_standard_error = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return value[i * cols + j]; }
  double se(std::size_t i, std::size_t j) const { return standard_error[i * cols + j]; }
};

/// Unbiased cross-covariance with jackknife standard errors. Rows of `a` and
/// `b` are paired samples. Throws DomainError for fewer than 2 samples or a
/// row count mismatch. With exactly 2 samples the errors are +inf.
CovarianceEstimate empirical_covariance(const SampleMatrix& a, const SampleMatrix& b);
CovarianceEstimate empirical_covariance(std::span<const Vec3> a, std::span<const Vec3> b);

/// Evaluation points of the normality experiment in dimensionless (x, t).
struct SpaceTimePoint {
  Vec3 x;
  double t = 0.0;
};

/// d points x_i = i s (1,1,1)/sqrt(3), t_i = i tau for i = 0..d-1.
std::vector<SpaceTimePoint> line_points(std::size_t d, double spacing = 1.0, double time_step = 0.1);

struct RejectionExperimentConfig {
  std::vector<std::size_t> modes{10, 30, 50, 70, 100, 150};  // N
  std::vector<std::size_t> variates{1, 2, 3, 4, 5, 6};       // d
  std::size_t replications = 1000;
  std::size_t sample_size = 50;                              // n
  double alpha = 0.05;
  int component = 0;
  double spacing = 1.0;
  double time_step = 0.1;
  LocalFrame frame{};
  RoystonVariant variant = RoystonVariant::Matlab;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RejectionTable {
  std::vector<std::size_t> modes;
  std::vector<std::size_t> variates;
  std::size_t replications = 0;
  std::vector<double> frequency;  // modes x variates

  double operator()(std::size_t i, std::size_t j) const { return frequency[i * variates.size() + j]; }
  /// Binomial standard error of one cell.
  double standard_error(std::size_t i, std::size_t j) const;
  /// Throws DomainError if (N, d) is not part of the table.
  double at(std::size_t n_modes, std::size_t d) const;
};

/// For each (N, d): `replications` groups of `sample_size` independent
/// parameter sets, one field component at the d points, Royston test at
/// `alpha`. Cell (N, d) replication r uses streams derived only from
/// (seed, N, d, r), so the table does not depend on `threads`.
RejectionTable rejection_frequency_experiment(const RejectionExperimentConfig& cfg);

/// Rows N, columns d, header `N,d1,...`.
void write_rejection_csv(const RejectionTable& table, std::ostream& out,
                         const std::vector<std::string>& preamble = {});

}  // namespace meltblow
