// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sepex/error.hpp"

namespace sepex {

namespace {

double linear_quantile(std::vector<double> sorted, double p) {
  std::sort(sorted.begin(), sorted.end());
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

SplineBasis::SplineBasis(double t_min, double t_max,
                         std::array<double, 2> interior)
    : t_min_(t_min), t_max_(t_max), interior_(interior) {
  if (!std::isfinite(t_min) || !std::isfinite(t_max) || !(t_min < t_max)) {
    throw ParameterError("spline boundary must satisfy t_min < t_max");
  }
  if (!(t_min < interior[0] && interior[0] < interior[1] &&
        interior[1] < t_max)) {
    throw ParameterError(
        "interior knots must be strictly increasing inside the boundary");
  }
  for (int i = 0; i <= degree; ++i) {
    knots_[static_cast<std::size_t>(i)] = t_min;
    knots_[static_cast<std::size_t>(num_knots - 1 - i)] = t_max;
  }
  knots_[degree + 1] = interior[0];
  knots_[degree + 2] = interior[1];
}

SplineBasis SplineBasis::with_quantile_knots(std::span<const double> ages,
                                             double t_min, double t_max) {
  if (ages.empty()) {
    throw ValidationError("cannot place knots without ages");
  }
  std::vector<double> v(ages.begin(), ages.end());
  const double q1 = linear_quantile(v, 1.0 / 3.0);
  const double q2 = linear_quantile(v, 2.0 / 3.0);
  if (t_min < q1 && q1 < q2 && q2 < t_max) {
    return SplineBasis(t_min, t_max, {q1, q2});
  }
  const double span = t_max - t_min;
  return SplineBasis(t_min, t_max,
                     {t_min + span / 3.0, t_min + 2.0 * span / 3.0});
}

std::array<double, SplineBasis::num_basis> SplineBasis::eval(double t) const {
  if (!std::isfinite(t) || t < t_min_ || t > t_max_) {
    throw ParameterError("spline argument " + std::to_string(t) +
                         " outside [" + std::to_string(t_min_) + ", " +
                         std::to_string(t_max_) + "]");
  }
  std::array<double, num_basis> out{};
  // Knot span index: knots_[span] <= t < knots_[span + 1]. The right
  // boundary belongs to the last non-degenerate span.
  int span = num_basis - 1;
  if (t < t_max_) {
    span = degree;
    while (span < num_basis - 1 &&
           t >= knots_[static_cast<std::size_t>(span + 1)]) {
      ++span;
    }
  }
  // Triangular table of the nonzero functions on the span.
  std::array<double, degree + 1> n{};
  std::array<double, degree + 1> left{};
  std::array<double, degree + 1> right{};
  n[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[static_cast<std::size_t>(j)] =
        t - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] =
        knots_[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] +
                           left[static_cast<std::size_t>(j - r)];
      const double temp = n[static_cast<std::size_t>(r)] / denom;
      n[static_cast<std::size_t>(r)] =
          saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    n[static_cast<std::size_t>(j)] = saved;
  }
  for (int r = 0; r <= degree; ++r) {
    out[static_cast<std::size_t>(span - degree + r)] =
        n[static_cast<std::size_t>(r)];
  }
  return out;
}

std::array<double, SplineBasis::num_basis> eval_basis(const SplineBasis& basis,
                                                      double t) {
  return basis.eval(t);
}

DesignMatrix build_design(std::span<const double> ages,
                          std::span<const int> conditions,
                          const SplineBasis& basis) {
  if (ages.size() != conditions.size()) {
    throw ValidationError("ages and conditions differ in length (" +
                          std::to_string(ages.size()) + " vs " +
                          std::to_string(conditions.size()) + ")");
  }
  DesignMatrix d;
  d.ages.assign(ages.begin(), ages.end());
  d.conditions.assign(conditions.begin(), conditions.end());
  d.x.setZero(static_cast<Eigen::Index>(ages.size()), DesignMatrix::num_cols);
  for (std::size_t j = 0; j < ages.size(); ++j) {
    if (conditions[j] != 0 && conditions[j] != 1) {
      throw ValidationError("condition z must be 0 or 1 at subject " +
                            std::to_string(j));
    }
    const auto b = basis.eval(ages[j]);
    const auto row = static_cast<Eigen::Index>(j);
    for (int m = 0; m < SplineBasis::num_basis; ++m) {
      d.x(row, m) = b[static_cast<std::size_t>(m)];
      d.x(row, m + SplineBasis::num_basis) =
          conditions[j] * b[static_cast<std::size_t>(m)];
    }
  }
  return d;
}

}  // namespace sepex
