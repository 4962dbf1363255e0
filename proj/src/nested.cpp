// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/nested.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include "sepex/error.hpp"
#include "sepex/stick_breaking.hpp"

namespace sepex {

namespace nested {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t draw_label(std::span<const double> log_weights, Rng& rng,
                       const std::string& where) {
  try {
    return rng.categorical_log(log_weights);
  } catch (const ParameterError& e) {
    throw NumericalError("degenerate conditional for " + where + ": " +
                         e.what());
  }
}

// Per-observation log likelihood table LL(l)(i, j) for the current atoms.
std::vector<Eigen::MatrixXd> loglik_table(const NestedState& s,
                                          const Eigen::MatrixXd& data) {
  std::vector<Eigen::MatrixXd> table(static_cast<std::size_t>(s.L()));
  for (int l = 0; l < s.L(); ++l) {
    const double var = s.sigma2(l);
    const double norm = -0.5 * std::log(2.0 * std::numbers::pi * var);
    table[static_cast<std::size_t>(l)] =
        (norm - 0.5 * (data.array() - s.mu(l)).square() / var).matrix();
  }
  return table;
}

std::vector<std::vector<std::size_t>> members_by_cluster(const NestedState& s) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(s.K()));
  for (std::size_t j = 0; j < s.partition.subject_labels.size(); ++j) {
    members[static_cast<std::size_t>(s.partition.subject_labels[j])].push_back(j);
  }
  return members;
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

void NestedModelConfig::validate() const {
  if (K < 1 || L < 1) {
    throw ValidationError("nested truncations K and L must be >= 1");
  }
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ParameterError("GEM masses alpha and beta must be > 0");
  }
  atom_prior.validate();
}

NestedModelConfig NestedModelConfig::empirical_bayes(
    const Eigen::MatrixXd& data) {
  NestedModelConfig c;
  const double n = static_cast<double>(data.size());
  const double mean = data.mean();
  const double var =
      n > 1 ? (data.array() - mean).square().sum() / (n - 1.0) : 0.0;
  c.atom_prior.m0 = mean;
  c.atom_prior.kappa0 = 0.1;
  c.atom_prior.a0 = 2.0;
  c.atom_prior.b0 = var > 0.0 ? var : 1.0;
  return c;
}

void NestedState::refresh_weights() {
  const auto pw = weights_from_sticks(
      std::span<const double>(pi_sticks.data(), static_cast<std::size_t>(pi_sticks.size())));
  pi = Eigen::Map<const Eigen::VectorXd>(pw.data(), static_cast<Eigen::Index>(pw.size()));
  w.resize(w_sticks.rows(), w_sticks.cols());
  for (Eigen::Index k = 0; k < w_sticks.rows(); ++k) {
    const Eigen::VectorXd row = w_sticks.row(k).transpose();
    const auto ww = weights_from_sticks(
        std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    for (Eigen::Index l = 0; l < w_sticks.cols(); ++l) {
      w(k, l) = ww[static_cast<std::size_t>(l)];
    }
  }
}

void NestedState::validate(const NestedModelConfig& config, Eigen::Index rows,
                           Eigen::Index cols) const {
  partition.validate();
  if (partition.K != config.K || partition.L != config.L) {
    throw ValidationError("state truncations differ from config");
  }
  if (partition.row_labels.cols() != rows ||
      static_cast<Eigen::Index>(partition.subject_labels.size()) != cols) {
    throw ValidationError("state dimensions differ from the data (" +
                          std::to_string(rows) + "x" + std::to_string(cols) +
                          ")");
  }
  if (pi.size() != config.K || pi_sticks.size() != config.K ||
      w.rows() != config.K || w.cols() != config.L ||
      w_sticks.rows() != config.K || w_sticks.cols() != config.L ||
      mu.size() != config.L || sigma2.size() != config.L) {
    throw ValidationError("state parameter vectors have wrong sizes");
  }
  if ((sigma2.array() <= 0.0).any()) {
    throw ValidationError("atom variances must be > 0");
  }
}

NestedState sample_prior(const NestedModelConfig& config, Eigen::Index rows,
                         Eigen::Index cols, Rng& rng) {
  config.validate();
  NestedState s;
  s.partition.K = config.K;
  s.partition.L = config.L;
  const std::vector<int> no_k(static_cast<std::size_t>(config.K), 0);
  const std::vector<int> no_l(static_cast<std::size_t>(config.L), 0);

  const auto pd = update_stick_weights(no_k, config.beta, rng);
  s.pi_sticks = Eigen::Map<const Eigen::VectorXd>(pd.sticks.data(), config.K);
  s.w_sticks.resize(config.K, config.L);
  for (int k = 0; k < config.K; ++k) {
    const auto wd = update_stick_weights(no_l, config.alpha, rng);
    for (int l = 0; l < config.L; ++l) {
      s.w_sticks(k, l) = wd.sticks[static_cast<std::size_t>(l)];
    }
  }
  s.refresh_weights();

  s.partition.subject_labels.resize(static_cast<std::size_t>(cols));
  for (auto& label : s.partition.subject_labels) {
    label = static_cast<int>(rng.categorical(
        std::span<const double>(s.pi.data(), static_cast<std::size_t>(config.K))));
  }
  s.partition.row_labels.resize(config.K, rows);
  for (int k = 0; k < config.K; ++k) {
    const Eigen::VectorXd wk = s.w.row(k).transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      s.partition.row_labels(k, i) = static_cast<int>(rng.categorical(
          std::span<const double>(wk.data(), static_cast<std::size_t>(config.L))));
    }
  }
  s.mu.resize(config.L);
  s.sigma2.resize(config.L);
  const auto& g0 = config.atom_prior;
  for (int l = 0; l < config.L; ++l) {
    s.sigma2(l) = rng.inverse_gamma(g0.a0, g0.b0);
    s.mu(l) = rng.normal(g0.m0, std::sqrt(s.sigma2(l) / g0.kappa0));
  }
  return s;
}

Eigen::MatrixXd sample_data(const NestedState& state, Eigen::Index rows,
                            Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd y(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const int k = state.partition.subject_labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < rows; ++i) {
      const int l = state.partition.row_labels(k, i);
      y(i, j) = rng.normal(state.mu(l), std::sqrt(state.sigma2(l)));
    }
  }
  return y;
}

double log_joint(const NestedState& state, const Eigen::MatrixXd& data,
                 const NestedModelConfig& config) {
  state.validate(config, data.rows(), data.cols());
  const auto& S = state.partition.subject_labels;
  const auto& M = state.partition.row_labels;
  double lp = 0.0;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const int k = S[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const int l = M(k, i);
      lp += dist::log_normal_pdf(data(i, j), state.mu(l), state.sigma2(l));
    }
    lp += safe_log(state.pi(k));
  }
  for (int k = 0; k < config.K; ++k) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      lp += safe_log(state.w(k, M(k, i)));
    }
  }
  lp += log_stick_prior(std::span<const double>(state.pi_sticks.data(),
                                                static_cast<std::size_t>(config.K)),
                        config.beta);
  for (int k = 0; k < config.K; ++k) {
    const Eigen::VectorXd row = state.w_sticks.row(k).transpose();
    lp += log_stick_prior(
        std::span<const double>(row.data(), static_cast<std::size_t>(config.L)),
        config.alpha);
  }
  for (int l = 0; l < config.L; ++l) {
    lp += config.atom_prior.log_density(state.mu(l), state.sigma2(l));
  }
  return lp;
}

std::vector<double> subject_label_log_weights(const NestedState& state,
                                              const Eigen::MatrixXd& data,
                                              std::size_t j) {
  const auto col = static_cast<Eigen::Index>(j);
  std::vector<double> lw(static_cast<std::size_t>(state.K()));
  for (int k = 0; k < state.K(); ++k) {
    double v = safe_log(state.pi(k));
    if (v == kNegInf) {
      lw[static_cast<std::size_t>(k)] = v;
      continue;
    }
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const int l = state.partition.row_labels(k, i);
      v += dist::log_normal_pdf(data(i, col), state.mu(l), state.sigma2(l));
    }
    lw[static_cast<std::size_t>(k)] = v;
  }
  return lw;
}

std::vector<double> row_label_log_weights(const NestedState& state,
                                          const Eigen::MatrixXd& data, int k,
                                          std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<double> lw(static_cast<std::size_t>(state.L()));
  for (int l = 0; l < state.L(); ++l) {
    double v = safe_log(state.w(k, l));
    for (std::size_t j = 0; j < state.partition.subject_labels.size(); ++j) {
      if (state.partition.subject_labels[j] != k) continue;
      v += dist::log_normal_pdf(data(row, static_cast<Eigen::Index>(j)),
                                state.mu(l), state.sigma2(l));
    }
    lw[static_cast<std::size_t>(l)] = v;
  }
  return lw;
}

NormalInvGammaParams atom_conditional(const NestedState& state,
                                      const Eigen::MatrixXd& data,
                                      const NestedModelConfig& config, int l) {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const int k = state.partition.subject_labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (state.partition.row_labels(k, i) != l) continue;
      ++n;
      sum += data(i, j);
      sum_sq += data(i, j) * data(i, j);
    }
  }
  return config.atom_prior.posterior(n, sum, sum_sq);
}

std::vector<int> subject_counts(const NestedState& state) {
  std::vector<int> counts(static_cast<std::size_t>(state.K()), 0);
  for (int k : state.partition.subject_labels) ++counts[static_cast<std::size_t>(k)];
  return counts;
}

std::vector<int> row_counts(const NestedState& state, int k) {
  std::vector<int> counts(static_cast<std::size_t>(state.L()), 0);
  for (Eigen::Index i = 0; i < state.partition.row_labels.cols(); ++i) {
    ++counts[static_cast<std::size_t>(state.partition.row_labels(k, i))];
  }
  return counts;
}

void update_subject_labels(NestedState& state, const Eigen::MatrixXd& data,
                           Rng& rng) {
  const auto table = loglik_table(state, data);
  const auto& M = state.partition.row_labels;
  std::vector<double> lw(static_cast<std::size_t>(state.K()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    // S_j are conditionally independent given everything else.
    for (int k = 0; k < state.K(); ++k) {
      double v = safe_log(state.pi(k));
      if (v != kNegInf) {
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
          v += table[static_cast<std::size_t>(M(k, i))](i, j);
        }
      }
      lw[static_cast<std::size_t>(k)] = v;
    }
    state.partition.subject_labels[static_cast<std::size_t>(j)] =
        static_cast<int>(draw_label(lw, rng, "subject " + std::to_string(j)));
  }
}

void update_row_labels(NestedState& state, const Eigen::MatrixXd& data,
                       Rng& rng) {
  const auto table = loglik_table(state, data);
  const auto members = members_by_cluster(state);
  std::vector<double> lw(static_cast<std::size_t>(state.L()));
  for (int k = 0; k < state.K(); ++k) {
    const auto& cols = members[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      for (int l = 0; l < state.L(); ++l) {
        double v = safe_log(state.w(k, l));
        if (v != kNegInf) {
          for (std::size_t j : cols) {
            v += table[static_cast<std::size_t>(l)](i, static_cast<Eigen::Index>(j));
          }
        }
        lw[static_cast<std::size_t>(l)] = v;
      }
      state.partition.row_labels(k, i) = static_cast<int>(draw_label(
          lw, rng,
          "row " + std::to_string(i) + " in column cluster " + std::to_string(k)));
    }
  }
}

void update_pi(NestedState& state, const NestedModelConfig& config, Rng& rng) {
  const auto d = update_stick_weights(subject_counts(state), config.beta, rng);
  for (int k = 0; k < state.K(); ++k) {
    state.pi_sticks(k) = d.sticks[static_cast<std::size_t>(k)];
    state.pi(k) = d.weights[static_cast<std::size_t>(k)];
  }
}

void update_w(NestedState& state, const NestedModelConfig& config, Rng& rng) {
  for (int k = 0; k < state.K(); ++k) {
    const auto d = update_stick_weights(row_counts(state, k), config.alpha, rng);
    for (int l = 0; l < state.L(); ++l) {
      state.w_sticks(k, l) = d.sticks[static_cast<std::size_t>(l)];
      state.w(k, l) = d.weights[static_cast<std::size_t>(l)];
    }
  }
}

void update_atoms(NestedState& state, const Eigen::MatrixXd& data,
                  const NestedModelConfig& config, Rng& rng) {
  const int L = state.L();
  std::vector<std::size_t> n(static_cast<std::size_t>(L), 0);
  std::vector<double> sum(static_cast<std::size_t>(L), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(L), 0.0);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const int k = state.partition.subject_labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const auto l = static_cast<std::size_t>(state.partition.row_labels(k, i));
      ++n[l];
      sum[l] += data(i, j);
      sum_sq[l] += data(i, j) * data(i, j);
    }
  }
  for (int l = 0; l < L; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    const auto post = config.atom_prior.posterior(n[idx], sum[idx], sum_sq[idx]);
    state.sigma2(l) = rng.inverse_gamma(post.a0, post.b0);
    state.mu(l) = rng.normal(post.m0, std::sqrt(state.sigma2(l) / post.kappa0));
  }
}

void gibbs_sweep(NestedState& state, const Eigen::MatrixXd& data,
                 const NestedModelConfig& config, Rng& rng,
                 bool freeze_subjects) {
  if (!freeze_subjects) update_subject_labels(state, data, rng);
  update_row_labels(state, data, rng);
  update_pi(state, config, rng);
  update_w(state, config, rng);
  update_atoms(state, data, config, rng);
}

NestedChain run_chain(const Eigen::MatrixXd& data,
                      const NestedModelConfig& config,
                      const RunSettings& settings, Rng& rng,
                      const std::optional<std::vector<int>>& frozen_subjects) {
  config.validate();
  settings.validate();
  if (data.size() == 0) {
    throw ValidationError("data matrix is empty");
  }
  if (!data.allFinite()) {
    throw ValidationError("data matrix contains non-finite values");
  }
  NestedState state = sample_prior(config, data.rows(), data.cols(), rng);
  if (frozen_subjects) {
    if (static_cast<Eigen::Index>(frozen_subjects->size()) != data.cols()) {
      throw ValidationError("frozen subject labels must cover every column");
    }
    state.partition.subject_labels = *frozen_subjects;
    state.partition.validate();
  }

  NestedChain chain;
  chain.log_joint.reserve(settings.iters);
  chain.draws.reserve(settings.num_retained());
  for (std::size_t t = 1; t <= settings.iters; ++t) {
    try {
      gibbs_sweep(state, data, config, rng, frozen_subjects.has_value());
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(t) + ": " + e.what());
    }
    chain.log_joint.push_back(log_joint(state, data, config));
    if (!std::isfinite(chain.log_joint.back())) {
      throw NumericalError("iteration " + std::to_string(t) +
                           ": log joint is not finite");
    }
    if (settings.retained(t)) {
      chain.draws.push_back(NestedDraw{t, state.partition.subject_labels,
                                       state.partition.row_labels, state.pi,
                                       state.w, state.mu, state.sigma2});
    }
  }
  return chain;
}

}  // namespace nested
}  // namespace sepex
