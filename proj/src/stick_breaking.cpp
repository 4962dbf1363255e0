// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/stick_breaking.hpp"

#include <string>

#include "sepex/error.hpp"

namespace sepex {

std::vector<double> weights_from_sticks(std::span<const double> sticks) {
  std::vector<double> w(sticks.size());
  double remaining = 1.0;
  for (std::size_t h = 0; h < sticks.size(); ++h) {
    w[h] = sticks[h] * remaining;
    remaining *= 1.0 - sticks[h];
  }
  return w;
}

std::vector<std::pair<double, double>> stick_posterior(
    std::span<const int> counts, double mass) {
  if (!(mass > 0.0)) {
    throw ParameterError("stick-breaking mass must be > 0");
  }
  if (counts.empty()) {
    throw ValidationError("stick-breaking needs at least one component");
  }
  std::vector<std::pair<double, double>> out(counts.size());
  long tail = 0;
  for (std::size_t h = counts.size(); h-- > 0;) {
    if (counts[h] < 0) {
      throw ValidationError("negative occupancy count at component " +
                            std::to_string(h));
    }
    out[h] = {1.0 + counts[h], mass + static_cast<double>(tail)};
    tail += counts[h];
  }
  out.back() = {1.0, 0.0};
  return out;
}

StickDraw update_stick_weights(std::span<const int> counts, double mass,
                               Rng& rng) {
  const auto params = stick_posterior(counts, mass);
  StickDraw d;
  d.sticks.resize(params.size());
  for (std::size_t h = 0; h + 1 < params.size(); ++h) {
    d.sticks[h] = rng.beta(params[h].first, params[h].second);
  }
  d.sticks.back() = 1.0;
  d.weights = weights_from_sticks(d.sticks);
  return d;
}

double log_stick_prior(std::span<const double> sticks, double mass) {
  double lp = 0.0;
  for (std::size_t h = 0; h + 1 < sticks.size(); ++h) {
    lp += dist::log_beta_pdf(sticks[h], 1.0, mass);
  }
  return lp;
}

}  // namespace sepex
