// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sepex::testing {

/// Marginal-conditional vs successive-conditional comparison of test
/// functions; z uses batch-means standard errors for the chain.
struct GewekeResult {
  std::vector<std::string> names;
  std::vector<double> z;
  std::size_t draws = 0;

  double max_abs_z() const;
};

/// Batch-means standard error of the mean (50 batches).
double batch_means_se(const std::vector<double>& x, std::size_t batches = 50);

/// 3 x 3 array, K = L = 3.
GewekeResult geweke_nested(std::size_t draws, std::uint64_t seed);
/// 2 proteins, 4 subjects at t = (0, 0, 1, 1), z = (0, 1, 0, 1), H = 3.
GewekeResult geweke_ddp(std::size_t draws, std::uint64_t seed);

}  // namespace sepex::testing
