// Apache License, Version 2.0, refer to LICENSE.txt

#include <array>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "sepex/error.hpp"
#include "sepex/rng.hpp"
#include "sepex/spline.hpp"

using namespace sepex;

namespace {

// Textbook Cox-de Boor recursion on the clamped knot vector, right-closed at
// the upper boundary.
double cox_de_boor(const std::vector<double>& knots, int i, int p, double t) {
  if (p == 0) {
    const bool last = t == knots.back() && knots[i] < knots[i + 1] &&
                      knots[i + 1] == knots.back();
    return (knots[i] <= t && t < knots[i + 1]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = knots[i + p] - knots[i];
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d1 > 0.0) v += (t - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, t);
  if (d2 > 0.0) v += (knots[i + p + 1] - t) / d2 * cox_de_boor(knots, i + 1, p - 1, t);
  return v;
}

std::vector<double> clamped(double a, double b, double k1, double k2) {
  return {a, a, a, a, k1, k2, b, b, b, b};
}

}  // namespace

TEST_CASE("clamped boundaries") {
  const SplineBasis b(0.0, 1.0, {1.0 / 3.0, 2.0 / 3.0});
  const auto left = b.eval(0.0);
  CHECK(left == std::array<double, 6>{1, 0, 0, 0, 0, 0});
  const auto right = b.eval(1.0);
  CHECK(right == std::array<double, 6>{0, 0, 0, 0, 0, 1});
  CHECK_THROWS_AS(b.eval(1.5), ParameterError);
  CHECK(b.knots()[0] == 0.0);
  CHECK(b.knots()[3] == 0.0);
  CHECK(b.knots()[6] == 1.0);
}

TEST_CASE("partition of unity, local support and Cox-de Boor agreement") {
  const SplineBasis b(0.0, 1.0, {1.0 / 3.0, 2.0 / 3.0});
  const auto knots = clamped(0.0, 1.0, 1.0 / 3.0, 2.0 / 3.0);
  Rng rng(21);
  double worst_sum = 0.0;
  double worst_oracle = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double t = rng.uniform();
    const auto v = b.eval(t);
    double s = 0.0;
    int nonzero = 0;
    for (int m = 0; m < 6; ++m) {
      s += v[static_cast<std::size_t>(m)];
      nonzero += v[static_cast<std::size_t>(m)] != 0.0;
      worst_oracle = std::max(
          worst_oracle, std::abs(v[static_cast<std::size_t>(m)] - cox_de_boor(knots, m, 3, t)));
    }
    CHECK(nonzero <= 4);
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  CHECK(worst_sum < 1e-12);
  CHECK(worst_oracle < 1e-10);
  const auto mid = b.eval(0.5);
  for (int m = 0; m < 6; ++m) {
    CHECK(std::abs(mid[static_cast<std::size_t>(m)] - cox_de_boor(knots, m, 3, 0.5)) < 1e-12);
  }
  // Symmetric knots give a mirror-symmetric basis at the midpoint.
  CHECK(mid[0] == doctest::Approx(0.0));
  CHECK(mid[1] == doctest::Approx(mid[4]));
  CHECK(mid[2] == doctest::Approx(mid[3]));
}

TEST_CASE("continuity at knots") {
  const SplineBasis b(1.0, 16.0, {6.0, 11.0});
  for (double k : {6.0, 11.0}) {
    const auto lo = b.eval(std::nextafter(k, 0.0));
    const auto hi = b.eval(k);
    for (int m = 0; m < 6; ++m) {
      CHECK(std::abs(lo[static_cast<std::size_t>(m)] - hi[static_cast<std::size_t>(m)]) < 1e-9);
    }
  }
}

TEST_CASE("quantile knots") {
  std::vector<double> ages;
  for (int t = 1; t <= 16; ++t) {
    ages.push_back(t);
    ages.push_back(t);
  }
  const auto b = SplineBasis::with_quantile_knots(ages, 1.0, 16.0);
  CHECK(b.interior_knots()[0] == doctest::Approx(6.0));
  CHECK(b.interior_knots()[1] == doctest::Approx(11.0));
  // Collapsed quantiles fall back on equal spacing.
  const std::vector<double> two{0.0, 0.0, 1.0, 1.0};
  const auto c = SplineBasis::with_quantile_knots(two, 0.0, 1.0);
  CHECK(c.interior_knots()[0] == doctest::Approx(1.0 / 3.0));
  CHECK(c.interior_knots()[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("design matrix") {
  std::vector<double> ages;
  std::vector<int> cond;
  for (int t = 1; t <= 16; ++t) {
    ages.push_back(t);
    cond.push_back(0);
    ages.push_back(t);
    cond.push_back(1);
  }
  const auto basis = SplineBasis::with_quantile_knots(ages, 1.0, 16.0);
  const auto d = build_design(ages, cond, basis);
  CHECK(d.rows() == 32);
  CHECK(d.x.cols() == 12);
  for (Eigen::Index j = 0; j < 32; ++j) {
    CHECK(d.x.row(j).head<6>().sum() == doctest::Approx(1.0).epsilon(1e-12));
    if (cond[static_cast<std::size_t>(j)] == 0) {
      CHECK(d.x.row(j).tail<6>().isZero());
    } else {
      CHECK(d.x.row(j).tail<6>() == d.x.row(j).head<6>());
    }
    if (j % 2 == 1) CHECK(d.x.row(j).head<6>() == d.x.row(j - 1).head<6>());
  }
}
