// Apache License, Version 2.0, refer to LICENSE.txt

#include "brute.hpp"

#include <algorithm>
#include <cmath>

namespace sepex::testing {

namespace {

void extend(std::vector<int>& cur, int blocks, int n,
            std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int b = 0; b <= blocks; ++b) {
    cur.push_back(b);
    extend(cur, std::max(blocks, b + 1), n, out);
    cur.pop_back();
  }
}

std::vector<int> counting_ranks(const std::vector<double>& v) {
  std::vector<int> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int below = 0;
    int tied_before = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] < v[i]) ++below;
      if (v[k] == v[i] && k <= i) ++tied_before;
    }
    r[i] = below + tied_before;
  }
  return r;
}

}  // namespace

std::vector<std::vector<int>> all_set_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  extend(cur, 0, n, out);
  return out;
}

BinderOptimum brute_binder(const Eigen::MatrixXd& p) {
  const auto n = static_cast<int>(p.rows());
  BinderOptimum best;
  best.loss = INFINITY;
  for (const auto& labels : all_set_partitions(n)) {
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = (labels[i] == labels[j] ? 1.0 : 0.0) - p(i, j);
        loss += d * d;
      }
    }
    if (loss < best.loss - 1e-12) {
      best.loss = loss;
      best.minimizers.clear();
    }
    if (loss <= best.loss + 1e-12) best.minimizers.push_back(labels);
  }
  return best;
}

std::vector<Partition> random_partition_draws(int n, int draws, Rng& rng) {
  const int blocks = 1 + static_cast<int>(rng.uniform() * n);
  std::vector<int> base(static_cast<std::size_t>(n));
  for (int& b : base) b = static_cast<int>(rng.uniform() * blocks);
  const double noise = 0.1 + 0.5 * rng.uniform();
  std::vector<Partition> out;
  for (int m = 0; m < draws; ++m) {
    std::vector<int> lab = base;
    for (int& b : lab) {
      if (rng.uniform() < noise) b = static_cast<int>(rng.uniform() * (blocks + 1));
    }
    out.push_back(Partition::from_labels(lab));
  }
  return out;
}

BruteRank brute_rank(const Eigen::MatrixXd& gamma, int num, int den, std::size_t top) {
  const auto M = static_cast<int>(gamma.rows());
  const auto I = static_cast<int>(gamma.cols());
  std::vector<int> exceed(static_cast<std::size_t>(I), 0);
  for (int m = 0; m < M; ++m) {
    std::vector<double> a(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i) a[static_cast<std::size_t>(i)] = std::abs(gamma(m, i));
    const auto r = counting_ranks(a);
    for (int i = 0; i < I; ++i) {
      // R / (I + 1) > num / den
      if (static_cast<long>(r[static_cast<std::size_t>(i)]) * den >
          static_cast<long>(num) * (I + 1)) {
        ++exceed[static_cast<std::size_t>(i)];
      }
    }
  }
  BruteRank out;
  for (int e : exceed) out.exceed_prob.push_back(static_cast<double>(e) / M);
  out.r_star = counting_ranks(out.exceed_prob);
  for (int i = 0; i < I; ++i) {
    if (out.r_star[static_cast<std::size_t>(i)] > I - static_cast<int>(top)) {
      out.selected.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

Eigen::MatrixXd random_gamma_draws(int M, int I, Rng& rng) {
  Eigen::MatrixXd g(M, I);
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < I; ++i) {
      g(m, i) = std::round(rng.normal(0.0, 2.0) * 2.0) / 2.0;
    }
  }
  return g;
}

}  // namespace sepex::testing
