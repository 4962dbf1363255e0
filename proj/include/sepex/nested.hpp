// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sepex/chain.hpp"
#include "sepex/partition.hpp"
#include "sepex/rng.hpp"

namespace sepex {

namespace nested {

/// Truncations and hyperparameters of the common-atoms nested mixture.
/// `alpha` is the GEM mass of the row weights w_k, `beta` the mass of the
/// column weights pi.
struct NestedModelConfig {
  int K = 20;
  int L = 30;
  double alpha = 1.0;
  double beta = 1.0;
  NormalInvGammaParams atom_prior;

  void validate() const;
  /// Defaults with the base measure centred on the data: m0 = grand mean,
  /// kappa0 = 0.1, a0 = 2, b0 = sample variance.
  static NestedModelConfig empirical_bayes(const Eigen::MatrixXd& data);
};

/// Full latent state. Weights are kept alongside their sticks; call
/// refresh_weights() after touching the sticks directly.
struct NestedState {
  NestedPartitionState partition;
  Eigen::VectorXd pi_sticks;  // K, last entry 1
  Eigen::VectorXd pi;         // K
  Eigen::MatrixXd w_sticks;   // K x L, last column 1
  Eigen::MatrixXd w;          // K x L
  Eigen::VectorXd mu;         // L
  Eigen::VectorXd sigma2;     // L

  int K() const { return partition.K; }
  int L() const { return partition.L; }
  void refresh_weights();
  /// Throws ValidationError when dimensions disagree with the data/config.
  void validate(const NestedModelConfig& config, Eigen::Index rows,
                Eigen::Index cols) const;
};

/// Draw (S, M, pi, w, mu, sigma2) from the prior for an I x J array.
NestedState sample_prior(const NestedModelConfig& config, Eigen::Index rows,
                         Eigen::Index cols, Rng& rng);
/// Draw data from the likelihood given the state.
Eigen::MatrixXd sample_data(const NestedState& state, Eigen::Index rows,
                            Eigen::Index cols, Rng& rng);

/// Log of the joint density of data and state. The weight priors are
/// densities of the free sticks.
double log_joint(const NestedState& state, const Eigen::MatrixXd& data,
                 const NestedModelConfig& config);

/// Unnormalized log conditional of S_j over k = 0..K-1.
std::vector<double> subject_label_log_weights(const NestedState& state,
                                              const Eigen::MatrixXd& data,
                                              std::size_t j);
/// Unnormalized log conditional of M(k, i) over l = 0..L-1.
std::vector<double> row_label_log_weights(const NestedState& state,
                                          const Eigen::MatrixXd& data, int k,
                                          std::size_t i);
/// Observations pooled into atom l: y_ij with M(S_j, i) = l.
NormalInvGammaParams atom_conditional(const NestedState& state,
                                      const Eigen::MatrixXd& data,
                                      const NestedModelConfig& config, int l);

std::vector<int> subject_counts(const NestedState& state);
/// Occupancy of the L row labels within column cluster k.
std::vector<int> row_counts(const NestedState& state, int k);

void update_subject_labels(NestedState& state, const Eigen::MatrixXd& data,
                           Rng& rng);
void update_row_labels(NestedState& state, const Eigen::MatrixXd& data,
                       Rng& rng);
void update_pi(NestedState& state, const NestedModelConfig& config, Rng& rng);
void update_w(NestedState& state, const NestedModelConfig& config, Rng& rng);
void update_atoms(NestedState& state, const Eigen::MatrixXd& data,
                  const NestedModelConfig& config, Rng& rng);

/// One sweep in the order S, M, pi, w, atoms. S is left untouched when
/// `freeze_subjects` is set.
void gibbs_sweep(NestedState& state, const Eigen::MatrixXd& data,
                 const NestedModelConfig& config, Rng& rng,
                 bool freeze_subjects = false);

struct NestedDraw {
  std::size_t iteration = 0;
  std::vector<int> S;
  Eigen::MatrixXi M;
  Eigen::VectorXd pi;
  Eigen::MatrixXd w;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
};

struct NestedChain {
  std::vector<NestedDraw> draws;
  std::vector<double> log_joint;  // one entry per iteration
};

/// Runs one chain. With `frozen_subjects` set, S is fixed to those labels
/// (must lie in [0, K)) and only the remaining blocks are updated.
NestedChain run_chain(const Eigen::MatrixXd& data,
                      const NestedModelConfig& config,
                      const RunSettings& settings, Rng& rng,
                      const std::optional<std::vector<int>>& frozen_subjects =
                          std::nullopt);

}  // namespace nested
}  // namespace sepex
