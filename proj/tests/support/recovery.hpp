// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>

#include "sepex/chain.hpp"

namespace sepex::testing {

/// One replicate of the three-cluster protein simulation fitted by the DDP
/// sampler with the default hyperparameters.
struct RecoveryResult {
  int k_mode = 0;               // posterior mode of the occupied-cluster count
  int k_point = 0;              // clusters in the Binder point estimate
  std::size_t misclassified = 0;
  double seconds = 0.0;
};

RecoveryResult protein_recovery(std::uint64_t seed, const RunSettings& run);

}  // namespace sepex::testing
