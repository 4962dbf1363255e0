// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sepex/chain.hpp"
#include "sepex/rng.hpp"
#include "sepex/spline.hpp"

namespace sepex::ddp {

constexpr int kCoef = DesignMatrix::num_cols;  // 12
using CoefVector = Eigen::Matrix<double, kCoef, 1>;
using CoefMatrix = Eigen::Matrix<double, kCoef, kCoef>;
using AtomMatrix = Eigen::Matrix<double, Eigen::Dynamic, kCoef>;  // H x 12

/// Hyperparameters of the ANOVA DDP mixture of spline regressions.
/// Defaults are the published settings; omega2 is the prior variance of the
/// time effects.
struct DdpConfig {
  int H = 25;
  double xi = 1.0;
  CoefVector beta0 = CoefVector::Zero();
  double sigma_beta0 = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;
  double zeta = 0.0;
  double omega2 = 0.01;
  double mu0 = 3.0;
  double sigma02 = 5.0;

  void validate() const;
};

/// Subjects with (z, t) = (0, first), (0, last), (1, first), (1, last).
struct CornerSubjects {
  std::size_t j01 = 0;
  std::size_t j0T = 0;
  std::size_t j11 = 0;
  std::size_t j1T = 0;
};

/// Response matrix plus everything the sampler needs about subjects.
struct DdpData {
  Eigen::MatrixXd y;             // I x J
  DesignMatrix design;           // J x 12
  std::vector<int> time_index;   // J entries in [0, T)
  int T = 0;
  std::optional<CornerSubjects> corners;

  Eigen::Index num_proteins() const { return y.rows(); }
  Eigen::Index num_subjects() const { return y.cols(); }
  void validate() const;
};

/// Builds DdpData from per-subject ages/conditions: time indices follow the
/// sorted unique ages, corner subjects are detected when present.
DdpData make_data(Eigen::MatrixXd y, std::span<const double> ages,
                  std::span<const int> conditions, const SplineBasis& basis);

std::optional<CornerSubjects> find_corners(std::span<const int> time_index,
                                           std::span<const int> conditions,
                                           int T);

struct DdpState {
  std::vector<int> s;         // I labels in [0, H)
  Eigen::VectorXd V;          // H sticks, V(H-1) = 1
  Eigen::VectorXd pi;         // H
  AtomMatrix beta;            // H x 12
  Eigen::VectorXd sigma2;     // H
  Eigen::VectorXd delta;      // T
  Eigen::VectorXd alpha;      // I

  int H() const { return static_cast<int>(V.size()); }
  std::vector<int> counts() const;
  void validate(const DdpConfig& config, const DdpData& data) const;
};

DdpState sample_prior(const DdpConfig& config, Eigen::Index proteins, int T,
                      Rng& rng);
Eigen::MatrixXd sample_data(const DdpState& state, const DdpData& data,
                            Rng& rng);

/// Log prior density of the state (sticks, labels, atoms, delta, alpha).
double log_prior(const DdpState& state, const DdpConfig& config);
double log_likelihood(const DdpState& state, const DdpData& data);
double log_joint(const DdpState& state, const DdpData& data,
                 const DdpConfig& config);

struct GaussianConditional {
  CoefVector mean;
  CoefMatrix precision;
};

struct NormalConditional {
  double mean = 0.0;
  double var = 1.0;
};

/// Unnormalized log P(s_i = h | .) for h = 0..H-1.
std::vector<double> cluster_label_log_weights(const DdpState& state,
                                              const DdpData& data,
                                              std::size_t i);
/// N(mean, precision^{-1}) conditional of beta_h given sigma2_h, alpha,
/// delta and the labels.
GaussianConditional beta_conditional(const DdpState& state, const DdpData& data,
                                     const DdpConfig& config, int h);
/// (shape, rate) of the inverse-gamma conditional of sigma2_h given beta_h.
std::pair<double, double> sigma2_conditional(const DdpState& state,
                                             const DdpData& data,
                                             const DdpConfig& config, int h);
NormalConditional delta_conditional(const DdpState& state, const DdpData& data,
                                    const DdpConfig& config, int t);
NormalConditional alpha_conditional(const DdpState& state, const DdpData& data,
                                    const DdpConfig& config, std::size_t i);

void update_cluster_labels(DdpState& state, const DdpData& data, Rng& rng);
void update_sticks(DdpState& state, const DdpConfig& config, Rng& rng);
/// beta_h then sigma2_h for every h; empty clusters draw from the prior.
void update_atoms_regression(DdpState& state, const DdpData& data,
                             const DdpConfig& config, Rng& rng);
void update_time_effects(DdpState& state, const DdpData& data,
                         const DdpConfig& config, Rng& rng);
void update_protein_offsets(DdpState& state, const DdpData& data,
                            const DdpConfig& config, Rng& rng);

void gibbs_sweep(DdpState& state, const DdpData& data, const DdpConfig& config,
                 Rng& rng, bool freeze_labels = false);

/// Patient-offset contrast x_{j1T,7:12} - x_{j11,7:12}.
Eigen::Matrix<double, 6, 1> gamma_contrast(const DdpData& data);
/// gamma_i = contrast . beta_{s_i,7:12} for every protein.
Eigen::VectorXd gamma_i(const DdpState& state, const DdpData& data);

/// Starting state of a chain: prior draw, then alpha_i = mean_j y_ij, all
/// proteins in cluster 0 (or `labels`), then sticks and atoms from their
/// conditionals.
DdpState initial_state(const DdpData& data, const DdpConfig& config, Rng& rng,
                       const std::optional<std::vector<int>>& labels = std::nullopt);

struct DdpDraw {
  std::size_t iteration = 0;
  std::vector<int> s;
  Eigen::VectorXd pi;
  AtomMatrix beta;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd delta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd gamma;  // empty when corner subjects are missing
};

struct DdpChain {
  std::vector<DdpDraw> draws;
  std::vector<double> log_joint;
};

DdpChain run_chain(const DdpData& data, const DdpConfig& config,
                   const RunSettings& settings, Rng& rng,
                   const std::optional<std::vector<int>>& frozen_labels =
                       std::nullopt);

/// Relabels a stored draw so occupied atoms come first in decreasing order
/// of |beta_h|. Only changes labels, never the partition.
void relabel_by_beta_norm(DdpDraw& draw);

}  // namespace sepex::ddp
