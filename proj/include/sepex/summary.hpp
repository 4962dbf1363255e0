// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sepex/ddp.hpp"
#include "sepex/nested.hpp"
#include "sepex/partition.hpp"
#include "sepex/rng.hpp"

namespace sepex::summary {

enum class PointSource { sampled, greedy, exhaustive };
std::string to_string(PointSource s);

struct PointEstimate {
  Partition partition;
  double loss = 0.0;
  PointSource source = PointSource::sampled;
  std::size_t best_draw = 0;  // index of the best sampled partition
};

struct DahlOptions {
  /// Up to this many items the search is completed by full enumeration of
  /// all set partitions (Bell(10) = 115975).
  std::size_t exhaustive_limit = 10;
  std::size_t max_sweeps = 200;
};

/// Binder-loss point estimate against the posterior co-clustering matrix:
/// best sampled partition, refined by greedy single-item moves, completed by
/// enumeration for small n. Ties keep the earlier stage.
PointEstimate dahl_point_estimate(std::span<const Partition> draws,
                                  const DahlOptions& options = {});

/// Greedy single-item relocation until no move lowers the loss.
Partition greedy_binder(const Partition& start, const Eigen::MatrixXd& coclust,
                        std::size_t max_sweeps = 200);

/// Mode of the number of occupied clusters; ties go to the smaller count.
int map_cluster_count(std::span<const Partition> draws);

/// Items not covered by the best one-to-one matching between the blocks of
/// `estimate` and `truth`.
std::size_t misclassification_count(const Partition& estimate,
                                    const Partition& truth);

/// p^k(i, i') = P(M_ik = M_i'k | y, S) for every block k of the subject
/// point estimate. Only draws whose subject partition equals the point
/// estimate contribute; a run with S frozen at the estimate passes all of
/// them. Throws ValidationError when no draw is compatible.
std::vector<Eigen::MatrixXd> nested_coclustering(
    std::span<const nested::NestedDraw> draws, const Partition& subject_point);

/// Rao-Blackwellized posterior mean of gamma_i: averages the conditional
/// mean of the patient-offset contrast given everything except beta.
Eigen::VectorXd rao_blackwell_gamma(std::span<const ddp::DdpDraw> draws,
                                    const ddp::DdpData& data,
                                    const ddp::DdpConfig& config);

/// Plain Monte Carlo mean of stored gamma draws.
Eigen::VectorXd mean_gamma(std::span<const ddp::DdpDraw> draws);

/// M x I matrix of stored gamma draws.
Eigen::MatrixXd gamma_draw_matrix(std::span<const ddp::DdpDraw> draws);

struct RankReport {
  double c = 0.0;
  Eigen::VectorXd exceed_prob;        // p(P_i > c | y)
  std::vector<int> r_star;            // 1-based ranks of exceed_prob
  std::vector<std::size_t> selected;  // indices with the largest r_star
};

/// Number of reported items for quantile c: ceil((1 - c)(I + 1)), capped
/// at I.
std::size_t top_set_size(double c, std::size_t items);

/// 1-based ranks of `values` ascending; ties broken by index order.
std::vector<int> ascending_ranks(std::span<const double> values);

/// Quantile ranking under the 0-1 top-set loss. `gamma_draws` is M x I.
/// `top` overrides the size of the selected set.
RankReport rank_quantile(const Eigen::MatrixXd& gamma_draws, double c,
                         std::optional<std::size_t> top = std::nullopt);

/// Difference of observed patient and control changes between the first
/// and last time, divided by T - 1.
Eigen::VectorXd naive_gamma_hat(const ddp::DdpData& data);

struct FitDiagnostics {
  std::vector<double> r2_per_cluster;
  std::vector<std::size_t> cluster_sizes;
  std::vector<double> residuals;     // one per retained draw
  std::vector<double> standardized;  // residual / sigma_h of the same draw
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;

  double mean_r2() const;
};

/// Johnson-style residual draws (one random cell per draw, fitted value
/// alpha_i + delta_t + x_j' beta_{s_i} of that draw) and per-cluster R^2 of
/// alpha*_h + mean delta_t + x_j' mean beta_h under `point`, with alpha*_h the
/// cluster average of the posterior mean alpha_i.
FitDiagnostics fit_diagnostics(std::span<const ddp::DdpDraw> draws,
                               const ddp::DdpData& data, const Partition& point,
                               Rng& rng);

/// (theoretical normal quantile, sorted sample) pairs.
std::vector<std::pair<double, double>> normal_qq(std::span<const double> sample);

/// Two-sided one-sample KS statistic of `sample` against N(0, 1).
double ks_statistic_normal(std::span<const double> sample);

}  // namespace sepex::summary
