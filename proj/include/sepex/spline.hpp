// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sepex {

/// Clamped cubic B-spline basis with two interior knots, i.e. six basis
/// functions on [t_min, t_max].
class SplineBasis {
 public:
  static constexpr int degree = 3;
  static constexpr int num_basis = 6;
  static constexpr int num_knots = num_basis + degree + 1;

  SplineBasis(double t_min, double t_max, std::array<double, 2> interior);

  /// Interior knots at the 1/3 and 2/3 sample quantiles of `ages`
  /// (linear-interpolation quantiles). Falls back on equally spaced knots
  /// when the quantiles collapse onto each other or onto the boundary.
  static SplineBasis with_quantile_knots(std::span<const double> ages,
                                         double t_min, double t_max);

  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  const std::array<double, 2>& interior_knots() const noexcept {
    return interior_;
  }
  const std::array<double, num_knots>& knots() const noexcept {
    return knots_;
  }

  /// All six basis functions at t. Throws ParameterError outside
  /// [t_min, t_max].
  std::array<double, num_basis> eval(double t) const;

 private:
  double t_min_;
  double t_max_;
  std::array<double, 2> interior_;
  std::array<double, num_knots> knots_;
};

std::array<double, SplineBasis::num_basis> eval_basis(const SplineBasis& basis,
                                                      double t);

/// J x 12 design: columns 0..5 hold the basis at t_j, columns 6..11 hold
/// z_j times the same values.
struct DesignMatrix {
  static constexpr int num_cols = 2 * SplineBasis::num_basis;
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, num_cols>;

  Matrix x;
  std::vector<double> ages;
  std::vector<int> conditions;

  Eigen::Index rows() const { return x.rows(); }
};

DesignMatrix build_design(std::span<const double> ages,
                          std::span<const int> conditions,
                          const SplineBasis& basis);

}  // namespace sepex
