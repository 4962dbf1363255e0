// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>

namespace sepex {

/// Iteration schedule shared by both samplers. Iterations are numbered
/// 1..iters; iteration t is retained when t > burnin and
/// (t - burnin) % thin == 0.
struct RunSettings {
  std::size_t iters = 5000;
  std::size_t burnin = 1000;
  std::size_t thin = 1;

  void validate() const;
  bool retained(std::size_t t) const {
    return t > burnin && (t - burnin) % thin == 0;
  }
  std::size_t num_retained() const {
    return iters > burnin ? (iters - burnin) / thin : 0;
  }
};

}  // namespace sepex
