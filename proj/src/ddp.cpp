// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/ddp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "sepex/error.hpp"
#include "sepex/stick_breaking.hpp"

namespace sepex::ddp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// delta_{t_j} for every subject.
Eigen::VectorXd subject_delta(const DdpState& s, const DdpData& d) {
  Eigen::VectorXd out(d.num_subjects());
  for (Eigen::Index j = 0; j < d.num_subjects(); ++j) {
    out(j) = s.delta(d.time_index[static_cast<std::size_t>(j)]);
  }
  return out;
}

CoefVector draw_gaussian(const GaussianConditional& c, Rng& rng) {
  Eigen::LLT<CoefMatrix> llt(c.precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("posterior precision of beta is not positive definite");
  }
  CoefVector z;
  rng.standard_normals(std::span<double>(z.data(), kCoef));
  // precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  const CoefVector noise = llt.matrixU().solve(z);
  return c.mean + noise;
}

}  // namespace

void DdpConfig::validate() const {
  if (H < 1) throw ParameterError("truncation H must be >= 1");
  if (!(xi > 0.0)) throw ParameterError("DP mass xi must be > 0");
  if (!(sigma_beta0 > 0.0) || !(a0 > 0.0) || !(b0 > 0.0) ||
      !(omega2 > 0.0) || !(sigma02 > 0.0)) {
    throw ParameterError("DDP scale hyperparameters must be > 0");
  }
  if (!beta0.allFinite() || !std::isfinite(zeta) || !std::isfinite(mu0)) {
    throw ParameterError("DDP location hyperparameters must be finite");
  }
}

void DdpData::validate() const {
  if (y.rows() == 0 || y.cols() == 0) {
    throw ValidationError("response matrix is empty");
  }
  if (design.rows() != y.cols() ||
      static_cast<Eigen::Index>(time_index.size()) != y.cols()) {
    throw ValidationError("design rows must match the number of subjects");
  }
  if (T < 1) throw ValidationError("need at least one time point");
  for (int t : time_index) {
    if (t < 0 || t >= T) throw ValidationError("time index out of range");
  }
  if (!y.allFinite()) {
    throw ValidationError("response matrix contains non-finite values");
  }
}

std::optional<CornerSubjects> find_corners(std::span<const int> time_index,
                                           std::span<const int> conditions,
                                           int T) {
  auto find = [&](int z, int t) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < time_index.size(); ++j) {
      if (conditions[j] == z && time_index[j] == t) return j;
    }
    return std::nullopt;
  };
  const auto a = find(0, 0);
  const auto b = find(0, T - 1);
  const auto c = find(1, 0);
  const auto d = find(1, T - 1);
  if (!a || !b || !c || !d || T < 2) return std::nullopt;
  return CornerSubjects{*a, *b, *c, *d};
}

DdpData make_data(Eigen::MatrixXd y, std::span<const double> ages,
                  std::span<const int> conditions, const SplineBasis& basis) {
  DdpData d;
  d.y = std::move(y);
  d.design = build_design(ages, conditions, basis);
  std::vector<double> unique(ages.begin(), ages.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  d.T = static_cast<int>(unique.size());
  d.time_index.resize(ages.size());
  for (std::size_t j = 0; j < ages.size(); ++j) {
    d.time_index[j] = static_cast<int>(
        std::lower_bound(unique.begin(), unique.end(), ages[j]) - unique.begin());
  }
  d.corners = find_corners(d.time_index, conditions, d.T);
  d.validate();
  return d;
}

std::vector<int> DdpState::counts() const {
  std::vector<int> n(static_cast<std::size_t>(H()), 0);
  for (int h : s) ++n[static_cast<std::size_t>(h)];
  return n;
}

void DdpState::validate(const DdpConfig& config, const DdpData& data) const {
  const Eigen::Index H = config.H;
  if (V.size() != H || pi.size() != H || beta.rows() != H ||
      sigma2.size() != H) {
    throw ValidationError("DDP atom arrays must have H entries");
  }
  if (static_cast<Eigen::Index>(s.size()) != data.num_proteins() ||
      alpha.size() != data.num_proteins()) {
    throw ValidationError("labels/offsets must cover every protein");
  }
  if (delta.size() != data.T) {
    throw ValidationError("time effects must cover every unique time");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= config.H) {
      throw ValidationError("cluster label out of range at protein " +
                            std::to_string(i));
    }
  }
  if ((sigma2.array() <= 0.0).any()) {
    throw ValidationError("cluster variances must be > 0");
  }
}

DdpState sample_prior(const DdpConfig& config, Eigen::Index proteins, int T,
                      Rng& rng) {
  config.validate();
  DdpState st;
  const std::vector<int> none(static_cast<std::size_t>(config.H), 0);
  const auto sd = update_stick_weights(none, config.xi, rng);
  st.V = Eigen::Map<const Eigen::VectorXd>(sd.sticks.data(), config.H);
  st.pi = Eigen::Map<const Eigen::VectorXd>(sd.weights.data(), config.H);
  st.s.resize(static_cast<std::size_t>(proteins));
  for (auto& label : st.s) {
    label = static_cast<int>(rng.categorical(sd.weights));
  }
  st.beta.resize(config.H, kCoef);
  st.sigma2.resize(config.H);
  for (int h = 0; h < config.H; ++h) {
    for (int c = 0; c < kCoef; ++c) {
      st.beta(h, c) = rng.normal(config.beta0(c), config.sigma_beta0);
    }
    st.sigma2(h) = rng.inverse_gamma(config.a0, config.b0);
  }
  st.delta.resize(T);
  for (int t = 0; t < T; ++t) {
    st.delta(t) = rng.normal(config.zeta, std::sqrt(config.omega2));
  }
  st.alpha.resize(proteins);
  for (Eigen::Index i = 0; i < proteins; ++i) {
    st.alpha(i) = rng.normal(config.mu0, std::sqrt(config.sigma02));
  }
  return st;
}

Eigen::MatrixXd sample_data(const DdpState& state, const DdpData& data,
                            Rng& rng) {
  const Eigen::MatrixXd xb = data.design.x * state.beta.transpose();  // J x H
  const Eigen::VectorXd dj = subject_delta(state, data);
  Eigen::MatrixXd y(data.num_proteins(), data.num_subjects());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const int h = state.s[static_cast<std::size_t>(i)];
    const double sd = std::sqrt(state.sigma2(h));
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      y(i, j) = rng.normal(state.alpha(i) + dj(j) + xb(j, h), sd);
    }
  }
  return y;
}

double log_prior(const DdpState& state, const DdpConfig& config) {
  double lp = log_stick_prior(
      std::span<const double>(state.V.data(), static_cast<std::size_t>(state.V.size())),
      config.xi);
  for (int h : state.s) lp += safe_log(state.pi(h));
  const double beta_var = config.sigma_beta0 * config.sigma_beta0;
  for (int h = 0; h < state.H(); ++h) {
    for (int c = 0; c < kCoef; ++c) {
      lp += dist::log_normal_pdf(state.beta(h, c), config.beta0(c), beta_var);
    }
    lp += dist::log_inverse_gamma_pdf(state.sigma2(h), config.a0, config.b0);
  }
  for (Eigen::Index t = 0; t < state.delta.size(); ++t) {
    lp += dist::log_normal_pdf(state.delta(t), config.zeta, config.omega2);
  }
  for (Eigen::Index i = 0; i < state.alpha.size(); ++i) {
    lp += dist::log_normal_pdf(state.alpha(i), config.mu0, config.sigma02);
  }
  return lp;
}

double log_likelihood(const DdpState& state, const DdpData& data) {
  const Eigen::MatrixXd xb = data.design.x * state.beta.transpose();
  const Eigen::VectorXd dj = subject_delta(state, data);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.num_proteins(); ++i) {
    const int h = state.s[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.num_subjects(); ++j) {
      ll += dist::log_normal_pdf(data.y(i, j), state.alpha(i) + dj(j) + xb(j, h),
                                 state.sigma2(h));
    }
  }
  return ll;
}

double log_joint(const DdpState& state, const DdpData& data,
                 const DdpConfig& config) {
  state.validate(config, data);
  return log_likelihood(state, data) + log_prior(state, config);
}

std::vector<double> cluster_label_log_weights(const DdpState& state,
                                              const DdpData& data,
                                              std::size_t i) {
  const Eigen::MatrixXd xb = data.design.x * state.beta.transpose();
  const Eigen::VectorXd dj = subject_delta(state, data);
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<double> lw(static_cast<std::size_t>(state.H()));
  for (int h = 0; h < state.H(); ++h) {
    double v = safe_log(state.pi(h));
    if (v != kNegInf) {
      for (Eigen::Index j = 0; j < data.num_subjects(); ++j) {
        v += dist::log_normal_pdf(data.y(row, j),
                                  state.alpha(row) + dj(j) + xb(j, h),
                                  state.sigma2(h));
      }
    }
    lw[static_cast<std::size_t>(h)] = v;
  }
  return lw;
}

GaussianConditional beta_conditional(const DdpState& state, const DdpData& data,
                                     const DdpConfig& config, int h) {
  const double prior_prec = 1.0 / (config.sigma_beta0 * config.sigma_beta0);
  GaussianConditional c;
  c.precision = prior_prec * CoefMatrix::Identity();
  CoefVector rhs = prior_prec * config.beta0;
  std::size_t n = 0;
  Eigen::VectorXd resid = Eigen::VectorXd::Zero(data.num_subjects());
  const Eigen::VectorXd dj = subject_delta(state, data);
  for (std::size_t i = 0; i < state.s.size(); ++i) {
    if (state.s[i] != h) continue;
    ++n;
    const auto row = static_cast<Eigen::Index>(i);
    resid += (data.y.row(row).transpose().array() - state.alpha(row) -
              dj.array()).matrix();
  }
  if (n > 0) {
    const auto& X = data.design.x;
    const double inv_var = 1.0 / state.sigma2(h);
    c.precision += (static_cast<double>(n) * inv_var) * (X.transpose() * X);
    rhs += inv_var * (X.transpose() * resid);
  }
  c.mean = c.precision.llt().solve(rhs);
  return c;
}

std::pair<double, double> sigma2_conditional(const DdpState& state,
                                             const DdpData& data,
                                             const DdpConfig& config, int h) {
  const Eigen::VectorXd xb = data.design.x * state.beta.row(h).transpose();
  const Eigen::VectorXd dj = subject_delta(state, data);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < state.s.size(); ++i) {
    if (state.s[i] != h) continue;
    ++n;
    const auto row = static_cast<Eigen::Index>(i);
    ss += (data.y.row(row).transpose() - xb - dj)
              .array()
              .operator-(state.alpha(row))
              .square()
              .sum();
  }
  const double shape =
      config.a0 + 0.5 * static_cast<double>(n) * static_cast<double>(data.num_subjects());
  return {shape, config.b0 + 0.5 * ss};
}

NormalConditional delta_conditional(const DdpState& state, const DdpData& data,
                                    const DdpConfig& config, int t) {
  const Eigen::MatrixXd xb = data.design.x * state.beta.transpose();
  double prec = 1.0 / config.omega2;
  double lin = config.zeta / config.omega2;
  for (Eigen::Index j = 0; j < data.num_subjects(); ++j) {
    if (data.time_index[static_cast<std::size_t>(j)] != t) continue;
    for (Eigen::Index i = 0; i < data.num_proteins(); ++i) {
      const int h = state.s[static_cast<std::size_t>(i)];
      const double iv = 1.0 / state.sigma2(h);
      prec += iv;
      lin += (data.y(i, j) - xb(j, h) - state.alpha(i)) * iv;
    }
  }
  return {lin / prec, 1.0 / prec};
}

NormalConditional alpha_conditional(const DdpState& state, const DdpData& data,
                                    const DdpConfig& config, std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  const int h = state.s[i];
  const Eigen::VectorXd xb = data.design.x * state.beta.row(h).transpose();
  const Eigen::VectorXd dj = subject_delta(state, data);
  const double iv = 1.0 / state.sigma2(h);
  const double J = static_cast<double>(data.num_subjects());
  const double prec = 1.0 / config.sigma02 + J * iv;
  const double resid = (data.y.row(row).transpose() - xb - dj).sum();
  return {(config.mu0 / config.sigma02 + resid * iv) / prec, 1.0 / prec};
}

void update_cluster_labels(DdpState& state, const DdpData& data, Rng& rng) {
  const Eigen::MatrixXd xb = data.design.x * state.beta.transpose();  // J x H
  const Eigen::VectorXd dj = subject_delta(state, data);
  const int H = state.H();
  std::vector<double> log_pi(static_cast<std::size_t>(H));
  std::vector<double> log_norm(static_cast<std::size_t>(H));
  for (int h = 0; h < H; ++h) {
    log_pi[static_cast<std::size_t>(h)] = safe_log(state.pi(h));
    log_norm[static_cast<std::size_t>(h)] =
        -0.5 * std::log(2.0 * std::numbers::pi * state.sigma2(h));
  }
  std::vector<double> lw(static_cast<std::size_t>(H));
  for (Eigen::Index i = 0; i < data.num_proteins(); ++i) {
    const Eigen::VectorXd base =
        data.y.row(i).transpose() - dj - Eigen::VectorXd::Constant(dj.size(), state.alpha(i));
    for (int h = 0; h < H; ++h) {
      const auto hh = static_cast<std::size_t>(h);
      if (log_pi[hh] == kNegInf) {
        lw[hh] = kNegInf;
        continue;
      }
      const double ss = (base - xb.col(h)).squaredNorm();
      lw[hh] = log_pi[hh] +
               static_cast<double>(data.num_subjects()) * log_norm[hh] -
               0.5 * ss / state.sigma2(h);
    }
    try {
      state.s[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.categorical_log(lw));
    } catch (const ParameterError& e) {
      throw NumericalError("degenerate cluster conditional for protein " +
                           std::to_string(i) + ": " + e.what());
    }
  }
}

void update_sticks(DdpState& state, const DdpConfig& config, Rng& rng) {
  const auto d = update_stick_weights(state.counts(), config.xi, rng);
  for (int h = 0; h < state.H(); ++h) {
    state.V(h) = d.sticks[static_cast<std::size_t>(h)];
    state.pi(h) = d.weights[static_cast<std::size_t>(h)];
  }
}

void update_atoms_regression(DdpState& state, const DdpData& data,
                             const DdpConfig& config, Rng& rng) {
  for (int h = 0; h < state.H(); ++h) {
    const auto cond = beta_conditional(state, data, config, h);
    state.beta.row(h) = draw_gaussian(cond, rng).transpose();
    const auto [shape, rate] = sigma2_conditional(state, data, config, h);
    state.sigma2(h) = rng.inverse_gamma(shape, rate);
  }
}

void update_time_effects(DdpState& state, const DdpData& data,
                         const DdpConfig& config, Rng& rng) {
  for (int t = 0; t < data.T; ++t) {
    const auto c = delta_conditional(state, data, config, t);
    state.delta(t) = rng.normal(c.mean, std::sqrt(c.var));
  }
}

void update_protein_offsets(DdpState& state, const DdpData& data,
                            const DdpConfig& config, Rng& rng) {
  for (std::size_t i = 0; i < state.s.size(); ++i) {
    const auto c = alpha_conditional(state, data, config, i);
    state.alpha(static_cast<Eigen::Index>(i)) = rng.normal(c.mean, std::sqrt(c.var));
  }
}

void gibbs_sweep(DdpState& state, const DdpData& data, const DdpConfig& config,
                 Rng& rng, bool freeze_labels) {
  if (!freeze_labels) update_cluster_labels(state, data, rng);
  update_sticks(state, config, rng);
  update_atoms_regression(state, data, config, rng);
  update_time_effects(state, data, config, rng);
  update_protein_offsets(state, data, config, rng);
}

Eigen::Matrix<double, 6, 1> gamma_contrast(const DdpData& data) {
  if (!data.corners) {
    throw ValidationError(
        "gamma needs patient subjects at the first and last time point");
  }
  const auto& c = *data.corners;
  const auto& X = data.design.x;
  return (X.row(static_cast<Eigen::Index>(c.j1T)).tail<6>() -
          X.row(static_cast<Eigen::Index>(c.j11)).tail<6>())
      .transpose();
}

Eigen::VectorXd gamma_i(const DdpState& state, const DdpData& data) {
  const auto contrast = gamma_contrast(data);
  Eigen::VectorXd g(static_cast<Eigen::Index>(state.s.size()));
  for (std::size_t i = 0; i < state.s.size(); ++i) {
    g(static_cast<Eigen::Index>(i)) =
        state.beta.row(state.s[i]).tail<6>().dot(contrast.transpose());
  }
  return g;
}

DdpState initial_state(const DdpData& data, const DdpConfig& config, Rng& rng,
                       const std::optional<std::vector<int>>& labels) {
  DdpState state = sample_prior(config, data.num_proteins(), data.T, rng);
  // alpha_i at the protein mean and a single occupied cluster; a prior draw
  // of alpha leaves proteins in clusters fitted to the wrong level, which
  // single-site label moves cannot undo.
  for (Eigen::Index i = 0; i < data.num_proteins(); ++i) {
    state.alpha(i) = data.y.row(i).mean();
  }
  if (labels) {
    state.s = *labels;
  } else {
    std::fill(state.s.begin(), state.s.end(), 0);
  }
  state.validate(config, data);
  update_sticks(state, config, rng);
  update_atoms_regression(state, data, config, rng);
  return state;
}

DdpChain run_chain(const DdpData& data, const DdpConfig& config,
                   const RunSettings& settings, Rng& rng,
                   const std::optional<std::vector<int>>& frozen_labels) {
  config.validate();
  settings.validate();
  data.validate();
  if (frozen_labels &&
      static_cast<Eigen::Index>(frozen_labels->size()) != data.num_proteins()) {
    throw ValidationError("frozen labels must cover every protein");
  }
  DdpState state = initial_state(data, config, rng, frozen_labels);
  DdpChain chain;
  chain.log_joint.reserve(settings.iters);
  chain.draws.reserve(settings.num_retained());
  for (std::size_t t = 1; t <= settings.iters; ++t) {
    try {
      gibbs_sweep(state, data, config, rng, frozen_labels.has_value());
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(t) + ": " + e.what());
    }
    chain.log_joint.push_back(log_joint(state, data, config));
    if (!std::isfinite(chain.log_joint.back())) {
      throw NumericalError("iteration " + std::to_string(t) +
                           ": log joint is not finite");
    }
    if (settings.retained(t)) {
      DdpDraw d{t, state.s, state.pi, state.beta, state.sigma2, state.delta,
                state.alpha, Eigen::VectorXd()};
      if (data.corners) d.gamma = gamma_i(state, data);
      chain.draws.push_back(std::move(d));
    }
  }
  return chain;
}

void relabel_by_beta_norm(DdpDraw& draw) {
  const auto H = static_cast<int>(draw.pi.size());
  std::vector<int> n(static_cast<std::size_t>(H), 0);
  for (int h : draw.s) ++n[static_cast<std::size_t>(h)];
  std::vector<int> order(static_cast<std::size_t>(H));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool oa = n[static_cast<std::size_t>(a)] > 0;
    const bool ob = n[static_cast<std::size_t>(b)] > 0;
    if (oa != ob) return oa;
    return draw.beta.row(a).norm() > draw.beta.row(b).norm();
  });
  std::vector<int> new_label(static_cast<std::size_t>(H));
  for (int pos = 0; pos < H; ++pos) {
    new_label[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;
  }
  DdpDraw out = draw;
  for (std::size_t i = 0; i < draw.s.size(); ++i) {
    out.s[i] = new_label[static_cast<std::size_t>(draw.s[i])];
  }
  for (int h = 0; h < H; ++h) {
    const int to = new_label[static_cast<std::size_t>(h)];
    out.pi(to) = draw.pi(h);
    out.beta.row(to) = draw.beta.row(h);
    out.sigma2(to) = draw.sigma2(h);
  }
  draw = std::move(out);
}

}  // namespace sepex::ddp
