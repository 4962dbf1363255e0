// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "sepex/ddp.hpp"
#include "sepex/nested.hpp"
#include "sepex/rng.hpp"

namespace sepex::exch {

/// Draws one random array (at least 2 x 2) per call.
using ArraySampler = std::function<Eigen::MatrixXd(Rng&)>;
/// Draws the row-cluster labels of every cell (at least 3 x 2) per call.
using LabelSampler = std::function<Eigen::MatrixXi(Rng&)>;

/// How the first quantity must relate to the second.
enum class Rule {
  at_least,  // first >= second - 3 SE
  greater,   // first > second + 3 SE
  equal,     // |first - second| < 3 SE
};
std::string to_string(Rule r);

struct ExchReport {
  std::string check;
  std::string model;
  std::size_t n_draws = 0;
  std::string first_label;
  double first = 0.0;
  double first_se = 0.0;
  std::string second_label;
  double second = 0.0;
  double second_se = 0.0;
  double diff_se = 0.0;  // SE of first - second, paired
  Rule rule = Rule::at_least;
  bool pass = false;

  std::string to_json() const;
};

/// Corr(x_ij, x_i'j) against Corr(x_ij, x_i'j'), using cells (0,0),
/// (1,0), (1,1).
ExchReport check_partial_corr(const ArraySampler& sampler, std::size_t n_draws,
                              Rng& rng, const std::string& model,
                              Rule rule = Rule::at_least);

/// Corr(x_ij, x_ij') against Corr(x_ij, x_i'j'), using cells (0,0), (0,1),
/// (1,1).
ExchReport check_separate_corr(const ArraySampler& sampler, std::size_t n_draws,
                               Rng& rng, const std::string& model,
                               Rule rule = Rule::at_least);

/// p(rows 0,1 together in column 1 | together in column 0) against
/// p(rows 0,2 together in column 1 | rows 0,1 together in column 0).
ExchReport check_coclustering_borrowing(const LabelSampler& sampler,
                                        std::size_t n_draws, Rng& rng,
                                        const std::string& model,
                                        Rule rule = Rule::greater);

// Reference and model samplers.
ArraySampler iid_normal_sampler(Eigen::Index rows, Eigen::Index cols);
/// x_ij = m_j + e_ij with unit variances.
ArraySampler column_effect_sampler(Eigen::Index rows, Eigen::Index cols);
/// x_ij = xi_i + eta_j + e_ij with unit variances.
ArraySampler additive_sampler(Eigen::Index rows, Eigen::Index cols);
/// Nested-model prior predictive draws.
ArraySampler nested_prior_sampler(const nested::NestedModelConfig& config,
                                  Eigen::Index rows, Eigen::Index cols);
/// ANOVA DDP prior on theta_it summaries alpha_i + delta_t + mean(beta_{s_i}),
/// rows = proteins, cols = times.
ArraySampler ddp_theta_sampler(const ddp::DdpConfig& config, Eigen::Index rows,
                               Eigen::Index times);
/// Cell labels M(S_j, i) of the nested prior.
LabelSampler nested_label_sampler(const nested::NestedModelConfig& config,
                                  Eigen::Index rows, Eigen::Index cols);
/// Partially exchangeable control: the column weights w_{S_j} come from the
/// nested prior, but every column draws its own row labels independently.
LabelSampler control_label_sampler(const nested::NestedModelConfig& config,
                                   Eigen::Index rows, Eigen::Index cols);

}  // namespace sepex::exch
