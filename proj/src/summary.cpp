// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sepex/error.hpp"

namespace sepex::summary {

namespace {

// Binder loss up to the constant sum of p_ij over pairs: sum over together
// pairs of (1 - 2 p_ij).
double relative_loss(const std::vector<int>& labels, const Eigen::MatrixXd& a) {
  double v = 0.0;
  const auto n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) {
        v += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return v;
}

Partition exhaustive_binder(const Eigen::MatrixXd& coclust) {
  const auto n = static_cast<std::size_t>(coclust.rows());
  const Eigen::MatrixXd a = (1.0 - 2.0 * coclust.array()).matrix();
  // Restricted growth strings enumerate each set partition once.
  std::vector<int> rgs(n, 0);
  std::vector<int> prefix_max(n, 0);
  std::vector<int> best = rgs;
  double best_v = relative_loss(rgs, a);
  for (;;) {
    std::size_t i = n;
    while (i-- > 1) {
      if (rgs[i] <= prefix_max[i - 1]) break;
    }
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
    const double v = relative_loss(rgs, a);
    if (v < best_v - 1e-12) {
      best_v = v;
      best = rgs;
    }
  }
  return Partition::from_labels(best);
}

}  // namespace

std::string to_string(PointSource s) {
  switch (s) {
    case PointSource::sampled: return "sampled";
    case PointSource::greedy: return "greedy";
    case PointSource::exhaustive: return "exhaustive";
  }
  return "unknown";
}

Partition greedy_binder(const Partition& start, const Eigen::MatrixXd& coclust,
                        std::size_t max_sweeps) {
  const auto n = start.size();
  const Eigen::MatrixXd a = (1.0 - 2.0 * coclust.array()).matrix();
  std::vector<int> labels = start.labels();
  int next_label = start.num_clusters();
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Cost of i joining each block, with i itself removed.
      std::map<int, double> join;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        join[labels[j]] += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      const int current = labels[i];
      const double stay = join.count(current) ? join[current] : 0.0;
      double best = stay;
      int best_label = current;
      for (const auto& [label, cost] : join) {
        if (cost < best - 1e-12) {
          best = cost;
          best_label = label;
        }
      }
      // A fresh singleton costs 0.
      if (0.0 < best - 1e-12 && join.count(current)) {
        best = 0.0;
        best_label = next_label++;
      }
      if (best_label != current) {
        labels[i] = best_label;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return Partition::from_labels(labels);
}

PointEstimate dahl_point_estimate(std::span<const Partition> draws,
                                  const DahlOptions& options) {
  const Eigen::MatrixXd cc = coclustering_matrix(draws);
  PointEstimate best;
  best.loss = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < draws.size(); ++m) {
    const double loss = binder_loss(draws[m], cc);
    if (loss < best.loss) {
      best.loss = loss;
      best.partition = draws[m];
      best.best_draw = m;
    }
  }
  const Partition refined = greedy_binder(best.partition, cc, options.max_sweeps);
  const double refined_loss = binder_loss(refined, cc);
  if (refined_loss < best.loss - 1e-12) {
    best.partition = refined;
    best.loss = refined_loss;
    best.source = PointSource::greedy;
  }
  if (cc.rows() <= static_cast<Eigen::Index>(options.exhaustive_limit)) {
    const Partition exact = exhaustive_binder(cc);
    const double exact_loss = binder_loss(exact, cc);
    if (exact_loss < best.loss - 1e-12) {
      best.partition = exact;
      best.loss = exact_loss;
      best.source = PointSource::exhaustive;
    }
  }
  return best;
}

int map_cluster_count(std::span<const Partition> draws) {
  if (draws.empty()) {
    throw ValidationError("cluster count mode needs at least one draw");
  }
  std::map<int, std::size_t> freq;
  for (const auto& p : draws) ++freq[p.num_clusters()];
  int mode = 0;
  std::size_t top = 0;
  for (const auto& [k, f] : freq) {  // ascending k, so ties keep the smaller
    if (f > top) {
      top = f;
      mode = k;
    }
  }
  return mode;
}

std::size_t misclassification_count(const Partition& estimate,
                                    const Partition& truth) {
  if (estimate.size() != truth.size()) {
    throw ValidationError("partitions cover different numbers of items");
  }
  const int ke = estimate.num_clusters();
  const int kt = truth.num_clusters();
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(ke, kt);
  for (std::size_t i = 0; i < truth.size(); ++i) ++table(estimate[i], truth[i]);

  // Best one-to-one matching. Exact assignment over subsets of the smaller
  // side when it is small; otherwise greedy on the largest cells.
  const bool transpose = kt > ke;
  const Eigen::MatrixXi t = transpose ? Eigen::MatrixXi(table.transpose()) : table;
  const int rows = static_cast<int>(t.rows());
  const int cols = static_cast<int>(t.cols());  // cols <= rows
  std::size_t matched = 0;
  if (cols <= 16) {
    const std::size_t masks = std::size_t{1} << cols;
    std::vector<long> dp(masks, -1);
    dp[0] = 0;
    for (int r = 0; r < rows; ++r) {
      std::vector<long> next = dp;
      for (std::size_t mask = 0; mask < masks; ++mask) {
        if (dp[mask] < 0) continue;
        for (int c = 0; c < cols; ++c) {
          if (mask & (std::size_t{1} << c)) continue;
          const std::size_t nm = mask | (std::size_t{1} << c);
          next[nm] = std::max(next[nm], dp[mask] + t(r, c));
        }
      }
      dp = std::move(next);
    }
    matched = static_cast<std::size_t>(*std::max_element(dp.begin(), dp.end()));
  } else {
    Eigen::MatrixXi work = t;
    for (int step = 0; step < cols; ++step) {
      Eigen::Index r, c;
      const int v = work.maxCoeff(&r, &c);
      if (v <= 0) break;
      matched += static_cast<std::size_t>(v);
      work.row(r).setConstant(-1);
      work.col(c).setConstant(-1);
    }
  }
  return truth.size() - matched;
}

std::vector<Eigen::MatrixXd> nested_coclustering(
    std::span<const nested::NestedDraw> draws, const Partition& subject_point) {
  if (draws.empty()) {
    throw ValidationError("no draws supplied for nested co-clustering");
  }
  const int clusters = subject_point.num_clusters();
  std::vector<std::size_t> representative(static_cast<std::size_t>(clusters));
  for (std::size_t j = subject_point.size(); j-- > 0;) {
    representative[static_cast<std::size_t>(subject_point[j])] = j;
  }
  const Eigen::Index I = draws.front().M.cols();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(clusters),
                                   Eigen::MatrixXd::Zero(I, I));
  std::size_t used = 0;
  for (const auto& d : draws) {
    if (d.S.size() != subject_point.size()) {
      throw ValidationError("draw and point estimate cover different subjects");
    }
    if (Partition::from_labels(d.S) != subject_point) continue;
    ++used;
    for (int c = 0; c < clusters; ++c) {
      const int k = d.S[representative[static_cast<std::size_t>(c)]];
      auto& acc = out[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < I; ++i) {
        for (Eigen::Index i2 = i + 1; i2 < I; ++i2) {
          if (d.M(k, i) == d.M(k, i2)) acc(i, i2) += 1.0;
        }
      }
    }
  }
  if (used == 0) {
    throw ValidationError(
        "no draw matches the subject point estimate; re-run the sampler with "
        "the subject labels frozen at the estimate");
  }
  for (auto& m : out) {
    m /= static_cast<double>(used);
    m = (m + m.transpose()).eval();
    m.diagonal().setOnes();
  }
  return out;
}

Eigen::VectorXd rao_blackwell_gamma(std::span<const ddp::DdpDraw> draws,
                                    const ddp::DdpData& data,
                                    const ddp::DdpConfig& config) {
  if (draws.empty()) throw ValidationError("no draws for Rao-Blackwellization");
  const auto contrast = ddp::gamma_contrast(data);
  const Eigen::Index I = data.num_proteins();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(I);
  for (const auto& d : draws) {
    ddp::DdpState st;
    st.s = d.s;
    st.pi = d.pi;
    st.V = Eigen::VectorXd::Ones(d.pi.size());
    st.beta = d.beta;
    st.sigma2 = d.sigma2;
    st.delta = d.delta;
    st.alpha = d.alpha;
    std::vector<double> cluster_gamma(static_cast<std::size_t>(d.pi.size()),
                                      std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < I; ++i) {
      const int h = d.s[static_cast<std::size_t>(i)];
      double& g = cluster_gamma[static_cast<std::size_t>(h)];
      if (std::isnan(g)) {
        const auto cond = ddp::beta_conditional(st, data, config, h);
        g = cond.mean.tail<6>().dot(contrast);
      }
      acc(i) += g;
    }
  }
  return acc / static_cast<double>(draws.size());
}

Eigen::MatrixXd gamma_draw_matrix(std::span<const ddp::DdpDraw> draws) {
  if (draws.empty() || draws.front().gamma.size() == 0) {
    throw ValidationError("archive holds no gamma draws");
  }
  const Eigen::Index I = draws.front().gamma.size();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(draws.size()), I);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    g.row(static_cast<Eigen::Index>(m)) = draws[m].gamma.transpose();
  }
  return g;
}

Eigen::VectorXd mean_gamma(std::span<const ddp::DdpDraw> draws) {
  return gamma_draw_matrix(draws).colwise().mean().transpose();
}

std::size_t top_set_size(double c, std::size_t items) {
  const double raw = (1.0 - c) * static_cast<double>(items + 1);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(k, items);
}

std::vector<int> ascending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<int> rank(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[order[pos]] = static_cast<int>(pos) + 1;
  }
  return rank;
}

RankReport rank_quantile(const Eigen::MatrixXd& gamma_draws, double c,
                         std::optional<std::size_t> top) {
  if (!(c > 0.0 && c < 1.0)) {
    throw ParameterError("quantile level c must lie in (0, 1)");
  }
  if (gamma_draws.rows() < 1 || gamma_draws.cols() < 1) {
    throw ValidationError("rank estimation needs at least one draw");
  }
  const Eigen::Index M = gamma_draws.rows();
  const Eigen::Index I = gamma_draws.cols();
  RankReport r;
  r.c = c;
  r.exceed_prob = Eigen::VectorXd::Zero(I);
  std::vector<double> absval(static_cast<std::size_t>(I));
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index i = 0; i < I; ++i) {
      absval[static_cast<std::size_t>(i)] = std::abs(gamma_draws(m, i));
    }
    const auto ranks = ascending_ranks(absval);
    for (Eigen::Index i = 0; i < I; ++i) {
      const double p = ranks[static_cast<std::size_t>(i)] / static_cast<double>(I + 1);
      if (p > c) r.exceed_prob(i) += 1.0;
    }
  }
  r.exceed_prob /= static_cast<double>(M);
  r.r_star = ascending_ranks(std::span<const double>(
      r.exceed_prob.data(), static_cast<std::size_t>(I)));
  const std::size_t k =
      top ? std::min(*top, static_cast<std::size_t>(I))
          : top_set_size(c, static_cast<std::size_t>(I));
  for (std::size_t i = 0; i < r.r_star.size(); ++i) {
    if (r.r_star[i] > static_cast<int>(static_cast<std::size_t>(I) - k)) {
      r.selected.push_back(i);
    }
  }
  std::sort(r.selected.begin(), r.selected.end(), [&](std::size_t a, std::size_t b) {
    return r.r_star[a] > r.r_star[b];
  });
  return r;
}

Eigen::VectorXd naive_gamma_hat(const ddp::DdpData& data) {
  if (!data.corners) {
    throw ValidationError("naive gamma needs all four corner subjects");
  }
  const auto& c = *data.corners;
  const auto col = [](std::size_t j) { return static_cast<Eigen::Index>(j); };
  return ((data.y.col(col(c.j1T)) - data.y.col(col(c.j11))) -
          (data.y.col(col(c.j0T)) - data.y.col(col(c.j01)))) /
         static_cast<double>(data.T - 1);
}

double FitDiagnostics::mean_r2() const {
  if (r2_per_cluster.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(r2_per_cluster.begin(), r2_per_cluster.end(), 0.0) /
         static_cast<double>(r2_per_cluster.size());
}

FitDiagnostics fit_diagnostics(std::span<const ddp::DdpDraw> draws,
                               const ddp::DdpData& data, const Partition& point,
                               Rng& rng) {
  if (draws.empty()) throw ValidationError("no draws for fit diagnostics");
  const Eigen::Index I = data.num_proteins();
  const Eigen::Index J = data.num_subjects();
  if (static_cast<Eigen::Index>(point.size()) != I) {
    throw ValidationError("point partition must cover every protein");
  }
  const auto& X = data.design.x;
  const double M = static_cast<double>(draws.size());

  // Posterior means. beta is averaged per protein through its own label so
  // the result does not depend on label switching.
  ddp::AtomMatrix beta_bar = ddp::AtomMatrix::Zero(I, ddp::kCoef);
  Eigen::VectorXd alpha_bar = Eigen::VectorXd::Zero(I);
  Eigen::VectorXd delta_bar = Eigen::VectorXd::Zero(data.T);
  for (const auto& d : draws) {
    for (Eigen::Index i = 0; i < I; ++i) {
      beta_bar.row(i) += d.beta.row(d.s[static_cast<std::size_t>(i)]);
    }
    alpha_bar += d.alpha;
    delta_bar += d.delta;
  }
  beta_bar /= M;
  alpha_bar /= M;
  delta_bar /= M;

  FitDiagnostics out;
  const int K = point.num_clusters();
  out.cluster_sizes.assign(static_cast<std::size_t>(K), 0);
  ddp::AtomMatrix beta_h = ddp::AtomMatrix::Zero(K, ddp::kCoef);
  Eigen::VectorXd alpha_star = Eigen::VectorXd::Zero(K);
  for (Eigen::Index i = 0; i < I; ++i) {
    const int h = point[static_cast<std::size_t>(i)];
    ++out.cluster_sizes[static_cast<std::size_t>(h)];
    beta_h.row(h) += beta_bar.row(i);
    alpha_star(h) += alpha_bar(i);
  }
  for (int h = 0; h < K; ++h) {
    const double n = static_cast<double>(out.cluster_sizes[static_cast<std::size_t>(h)]);
    beta_h.row(h) /= n;
    alpha_star(h) /= n;
  }
  std::vector<double> ss_res(static_cast<std::size_t>(K), 0.0);
  std::vector<double> sum(static_cast<std::size_t>(K), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(K), 0.0);
  for (Eigen::Index i = 0; i < I; ++i) {
    const int h = point[static_cast<std::size_t>(i)];
    const auto hh = static_cast<std::size_t>(h);
    for (Eigen::Index j = 0; j < J; ++j) {
      const double fitted = alpha_star(h) +
                            delta_bar(data.time_index[static_cast<std::size_t>(j)]) +
                            X.row(j).dot(beta_h.row(h));
      const double y = data.y(i, j);
      ss_res[hh] += (y - fitted) * (y - fitted);
      sum[hh] += y;
      sum_sq[hh] += y * y;
    }
  }
  for (int h = 0; h < K; ++h) {
    const auto hh = static_cast<std::size_t>(h);
    const double n = static_cast<double>(out.cluster_sizes[hh] * static_cast<std::size_t>(J));
    const double ss_tot = sum_sq[hh] - sum[hh] * sum[hh] / n;
    out.r2_per_cluster.push_back(ss_tot > 0.0 ? 1.0 - ss_res[hh] / ss_tot : 1.0);
  }

  // One residual per draw at a uniformly chosen cell, with the fitted value
  // built from that draw's own parameters (the protein's own alpha_i).
  for (const auto& d : draws) {
    const auto i = static_cast<Eigen::Index>(
        std::min<double>(std::floor(rng.uniform() * static_cast<double>(I)),
                         static_cast<double>(I - 1)));
    const auto j = static_cast<Eigen::Index>(
        std::min<double>(std::floor(rng.uniform() * static_cast<double>(J)),
                         static_cast<double>(J - 1)));
    const int h = d.s[static_cast<std::size_t>(i)];
    const double fitted = d.alpha(i) +
                          d.delta(data.time_index[static_cast<std::size_t>(j)]) +
                          X.row(j).dot(d.beta.row(h));
    const double resid = data.y(i, j) - fitted;
    out.residuals.push_back(resid);
    out.standardized.push_back(resid / std::sqrt(d.sigma2(h)));
  }
  out.ks_statistic = ks_statistic_normal(out.standardized);
  out.ks_pvalue = dist::kolmogorov_pvalue(out.ks_statistic, out.standardized.size());
  return out;
}

std::vector<std::pair<double, double>> normal_qq(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out[k] = {dist::normal_quantile((static_cast<double>(k) + 0.5) / n), sorted[k]};
  }
  return out;
}

double ks_statistic_normal(std::span<const double> sample) {
  if (sample.empty()) return 0.0;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double f = dist::normal_cdf(sorted[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

}  // namespace sepex::summary
