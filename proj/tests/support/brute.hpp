// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "sepex/partition.hpp"
#include "sepex/rng.hpp"

namespace sepex::testing {

/// Every set partition of n items, built by inserting item i into each
/// existing block or a new one.
std::vector<std::vector<int>> all_set_partitions(int n);

struct BinderOptimum {
  double loss = 0.0;
  std::vector<std::vector<int>> minimizers;  // all partitions attaining it
};
/// Binder loss sum_{i<j} (1[i~j] - p_ij)^2 minimized over all partitions.
BinderOptimum brute_binder(const Eigen::MatrixXd& coclust);

/// Random sampled partitions around a random base partition of n items.
std::vector<Partition> random_partition_draws(int n, int draws, Rng& rng);

struct BruteRank {
  std::vector<double> exceed_prob;
  std::vector<int> r_star;
  std::vector<std::size_t> selected;  // ascending index order
};
/// Per-draw ranks by counting (R_i = #{|g_k| < |g_i|} + #{k <= i : |g_k| =
/// |g_i|}), exceedance of c = num/den checked in integers, R* by the same
/// counting rule, then the top `top` items.
BruteRank brute_rank(const Eigen::MatrixXd& gamma, int num, int den, std::size_t top);

/// M x I draws on a coarse grid so ties occur.
Eigen::MatrixXd random_gamma_draws(int M, int I, Rng& rng);

}  // namespace sepex::testing
