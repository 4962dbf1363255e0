// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "sepex/error.hpp"

namespace sepex {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  // seed_seq output is fully specified by the standard, so the same
  // (seed, stream) pair gives the same engine state on every platform.
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32),
                    0x5e9e7u};
  return std::mt19937_64(seq);
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw ParameterError(std::string(what) + " must be finite");
  }
}

void require_positive(double x, const char* what) {
  require_finite(x, what);
  if (!(x > 0.0)) {
    throw ParameterError(std::string(what) + " must be > 0, got " +
                         std::to_string(x));
  }
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  for (;;) {
    const double u =
        static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double Rng::normal(double mean, double sd) {
  require_finite(mean, "normal mean");
  require_positive(sd, "normal sd");
  // Marsaglia polar method; implemented here instead of
  // std::normal_distribution so streams do not depend on the stdlib.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return mean + sd * u * std::sqrt(-2.0 * std::log(s) / s);
}

double Rng::gamma(double shape, double rate) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  if (shape < 1.0) {
    // Boost to shape + 1 and scale by U^{1/shape}.
    const double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform(), 1.0 / shape) / rate;
  }
  // Marsaglia and Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal(0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

double Rng::beta(double a, double b) {
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  const double sum = x + y;
  if (sum == 0.0) {
    // Both gammas underflowed (tiny shapes); fall back on the mean split.
    return a / (a + b);
  }
  return x / sum;
}

double Rng::inverse_gamma(double a, double b) {
  require_positive(a, "inverse gamma shape");
  require_positive(b, "inverse gamma rate");
  for (;;) {
    const double g = gamma(a, b);
    if (g > 0.0) return 1.0 / g;
  }
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ParameterError("categorical weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw ParameterError("categorical weights are all zero");
  }
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t h = 0; h < weights.size(); ++h) {
    if (weights[h] <= 0.0) continue;
    acc += weights[h];
    last_positive = h;
    if (target < acc) return h;
  }
  return last_positive;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw ParameterError("log weights must not be NaN or +inf");
    }
    top = std::max(top, lw);
  }
  if (!std::isfinite(top)) {
    throw ParameterError("all log weights are -inf");
  }
  std::vector<double> w(log_weights.size());
  for (std::size_t h = 0; h < w.size(); ++h) {
    w[h] = std::exp(log_weights[h] - top);
  }
  return categorical(w);
}

void Rng::standard_normals(std::span<double> out) {
  for (double& x : out) x = normal(0.0, 1.0);
}

double draw_normal(double mean, double sd, Rng& rng) {
  return rng.normal(mean, sd);
}
double draw_beta(double a, double b, Rng& rng) { return rng.beta(a, b); }
double draw_inverse_gamma(double a, double b, Rng& rng) {
  return rng.inverse_gamma(a, b);
}
std::size_t draw_categorical(std::span<const double> weights, Rng& rng) {
  return rng.categorical(weights);
}
std::size_t draw_categorical_log(std::span<const double> log_weights,
                                 Rng& rng) {
  return rng.categorical_log(log_weights);
}

void NormalInvGammaParams::validate() const {
  require_finite(m0, "m0");
  require_positive(kappa0, "kappa0");
  require_positive(a0, "a0");
  require_positive(b0, "b0");
}

NormalInvGammaParams NormalInvGammaParams::posterior(std::size_t n, double sum,
                                                     double sum_sq) const {
  if (n == 0) return *this;
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double ss = std::max(0.0, sum_sq - nn * mean * mean);
  NormalInvGammaParams post;
  post.kappa0 = kappa0 + nn;
  post.m0 = (kappa0 * m0 + sum) / post.kappa0;
  post.a0 = a0 + 0.5 * nn;
  post.b0 = b0 + 0.5 * ss +
            0.5 * kappa0 * nn * (mean - m0) * (mean - m0) / post.kappa0;
  return post;
}

double NormalInvGammaParams::log_density(double mu, double sigma2) const {
  return dist::log_normal_pdf(mu, m0, sigma2 / kappa0) +
         dist::log_inverse_gamma_pdf(sigma2, a0, b0);
}

namespace dist {

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_inverse_gamma_pdf(double x, double a, double b) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_beta_pdf(double x, double a, double b) {
  if (!(x > 0.0) || !(x < 1.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
         (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double log_student_t_pdf(double x, double nu, double loc, double scale) {
  const double z = (x - loc) / scale;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - std::log(scale) -
         0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw ParameterError("normal quantile requires p in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  // Stephens' finite-sample correction.
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace dist

}  // namespace sepex
