// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sepex/rng.hpp"

namespace sepex {

/// Finite stick-breaking draw. The last stick is fixed at 1, so the weights
/// sum to one up to rounding.
struct StickDraw {
  std::vector<double> sticks;
  std::vector<double> weights;
};

/// weights[h] = V_h * prod_{l < h} (1 - V_l).
std::vector<double> weights_from_sticks(std::span<const double> sticks);

/// Beta parameters of each stick given occupancy counts:
/// V_h ~ Be(1 + n_h, mass + sum_{l > h} n_l) for h < H - 1. The last entry
/// is returned as (1, 0) and stands for the fixed V_H = 1.
std::vector<std::pair<double, double>> stick_posterior(
    std::span<const int> counts, double mass);

/// Draws sticks from their conditional given counts; all-zero counts give a
/// prior GEM(mass) draw.
StickDraw update_stick_weights(std::span<const int> counts, double mass,
                               Rng& rng);

/// Log prior density of the free sticks V_1..V_{H-1}, each Be(1, mass).
double log_stick_prior(std::span<const double> sticks, double mass);

}  // namespace sepex
