// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sepex {

/// Seeded generator with an explicit stream id. Each chain owns one; the
/// (seed, stream) pair fully determines the draw sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal(double mean, double sd);
  /// Gamma with shape/rate parametrization, mean shape/rate.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  /// Inverse gamma with density proportional to x^{-(a+1)} exp(-b/x).
  double inverse_gamma(double a, double b);

  /// Index h with probability weights[h] / sum(weights).
  std::size_t categorical(std::span<const double> weights);
  /// Same as categorical() but with weights given on the log scale. Entries
  /// may be -inf; the maximum is subtracted before exponentiating.
  std::size_t categorical_log(std::span<const double> log_weights);

  /// Fills `out` with i.i.d. standard normals.
  void standard_normals(std::span<double> out);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// Free-function spellings used throughout the samplers.
double draw_normal(double mean, double sd, Rng& rng);
double draw_beta(double a, double b, Rng& rng);
double draw_inverse_gamma(double a, double b, Rng& rng);
std::size_t draw_categorical(std::span<const double> weights, Rng& rng);
std::size_t draw_categorical_log(std::span<const double> log_weights, Rng& rng);

/// Base measure of the nested mixture: mu | s2 ~ N(m0, s2/kappa0),
/// s2 ~ InvGamma(a0, b0).
struct NormalInvGammaParams {
  double m0 = 0.0;
  double kappa0 = 1.0;
  double a0 = 2.0;
  double b0 = 1.0;

  void validate() const;
  /// Conjugate update given sufficient statistics of n observations.
  NormalInvGammaParams posterior(std::size_t n, double sum, double sum_sq) const;
  /// Joint log density of (mu, sigma2).
  double log_density(double mu, double sigma2) const;
};

namespace dist {

double log_normal_pdf(double x, double mean, double var);
double log_inverse_gamma_pdf(double x, double a, double b);
double log_beta_pdf(double x, double a, double b);
/// Student-t log density with `nu` degrees of freedom, location and scale.
double log_student_t_pdf(double x, double nu, double loc, double scale);
double normal_cdf(double x);
double normal_quantile(double p);
/// Asymptotic Kolmogorov p-value for a one-sample KS statistic `d` at size n.
double kolmogorov_pvalue(double d, std::size_t n);

}  // namespace dist

}  // namespace sepex
