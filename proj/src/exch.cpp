// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/exch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "sepex/error.hpp"

namespace sepex::exch {

namespace {

constexpr std::size_t kBatches = 50;
constexpr double kSigmas = 3.0;

double corr(const std::vector<double>& a, const std::vector<double>& b,
            std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo);
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
    sab += (a[k] - ma) * (b[k] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double batch_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0) / n);
}

bool judge(Rule rule, double diff, double se) {
  switch (rule) {
    case Rule::at_least: return diff >= -kSigmas * se;
    case Rule::greater: return diff > kSigmas * se;
    case Rule::equal: return std::abs(diff) < kSigmas * se;
  }
  return false;
}

// Correlations of (anchor, a) and (anchor, b) with batch-means standard
// errors; the paired batch differences give the SE of the difference.
ExchReport corr_report(const std::vector<double>& anchor,
                       const std::vector<double>& a,
                       const std::vector<double>& b, Rule rule) {
  const std::size_t n = anchor.size();
  ExchReport r;
  r.n_draws = n;
  r.rule = rule;
  r.first = corr(anchor, a, 0, n);
  r.second = corr(anchor, b, 0, n);
  std::vector<double> fa, fb, fd;
  const std::size_t size = n / kBatches;
  for (std::size_t k = 0; k < kBatches; ++k) {
    const double ca = corr(anchor, a, k * size, (k + 1) * size);
    const double cb = corr(anchor, b, k * size, (k + 1) * size);
    fa.push_back(ca);
    fb.push_back(cb);
    fd.push_back(ca - cb);
  }
  r.first_se = batch_se(fa);
  r.second_se = batch_se(fb);
  r.diff_se = batch_se(fd);
  r.pass = judge(rule, r.first - r.second, r.diff_se);
  return r;
}

void require_draws(std::size_t n) {
  if (n < 10 * kBatches) {
    throw ParameterError("exchangeability checks need at least " +
                         std::to_string(10 * kBatches) + " draws");
  }
}

}  // namespace

std::string to_string(Rule r) {
  switch (r) {
    case Rule::at_least: return "first >= second - 3 SE";
    case Rule::greater: return "first > second + 3 SE";
    case Rule::equal: return "|first - second| < 3 SE";
  }
  return "unknown";
}

std::string ExchReport::to_json() const {
  nlohmann::ordered_json j;
  j["check"] = check;
  j["model"] = model;
  j["n_draws"] = n_draws;
  j["first"] = {{"label", first_label}, {"estimate", first}, {"se", first_se}};
  j["second"] = {{"label", second_label}, {"estimate", second}, {"se", second_se}};
  j["difference"] = first - second;
  j["difference_se"] = diff_se;
  j["rule"] = to_string(rule);
  j["result"] = pass ? "PASS" : "FAIL";
  return j.dump(2);
}

ExchReport check_partial_corr(const ArraySampler& sampler, std::size_t n_draws,
                              Rng& rng, const std::string& model, Rule rule) {
  require_draws(n_draws);
  std::vector<double> x00, x10, x11;
  for (std::size_t m = 0; m < n_draws; ++m) {
    const Eigen::MatrixXd x = sampler(rng);
    if (x.rows() < 2 || x.cols() < 2) {
      throw ParameterError("sampler must emit at least a 2 x 2 array");
    }
    x00.push_back(x(0, 0));
    x10.push_back(x(1, 0));
    x11.push_back(x(1, 1));
  }
  auto r = corr_report(x00, x10, x11, rule);
  r.check = "partial_corr";
  r.model = model;
  r.first_label = "corr(x_ij, x_i'j)";
  r.second_label = "corr(x_ij, x_i'j')";
  return r;
}

ExchReport check_separate_corr(const ArraySampler& sampler, std::size_t n_draws,
                               Rng& rng, const std::string& model, Rule rule) {
  require_draws(n_draws);
  std::vector<double> x00, x01, x11;
  for (std::size_t m = 0; m < n_draws; ++m) {
    const Eigen::MatrixXd x = sampler(rng);
    if (x.rows() < 2 || x.cols() < 2) {
      throw ParameterError("sampler must emit at least a 2 x 2 array");
    }
    x00.push_back(x(0, 0));
    x01.push_back(x(0, 1));
    x11.push_back(x(1, 1));
  }
  auto r = corr_report(x00, x01, x11, rule);
  r.check = "separate_corr";
  r.model = model;
  r.first_label = "corr(x_ij, x_ij')";
  r.second_label = "corr(x_ij, x_i'j')";
  return r;
}

ExchReport check_coclustering_borrowing(const LabelSampler& sampler,
                                        std::size_t n_draws, Rng& rng,
                                        const std::string& model, Rule rule) {
  require_draws(n_draws);
  std::size_t cond = 0, hits_a = 0, hits_b = 0;
  std::vector<double> d;  // paired indicator difference over conditioning draws
  for (std::size_t m = 0; m < n_draws; ++m) {
    const Eigen::MatrixXi lab = sampler(rng);
    if (lab.rows() < 3 || lab.cols() < 2) {
      throw ParameterError("label sampler must emit at least a 3 x 2 array");
    }
    if (lab(0, 0) != lab(1, 0)) continue;
    ++cond;
    const int a = lab(0, 1) == lab(1, 1);
    const int b = lab(0, 1) == lab(2, 1);
    hits_a += static_cast<std::size_t>(a);
    hits_b += static_cast<std::size_t>(b);
    d.push_back(static_cast<double>(a - b));
  }
  if (cond < 2) {
    throw NumericalError("too few draws with rows 0 and 1 co-clustered");
  }
  ExchReport r;
  r.check = "coclustering_borrowing";
  r.model = model;
  r.n_draws = n_draws;
  r.rule = rule;
  r.first_label = "p(co(1,2) in j' | co(1,2) in j)";
  r.second_label = "p(co(1,3) in j' | co(1,2) in j)";
  const double n = static_cast<double>(cond);
  r.first = static_cast<double>(hits_a) / n;
  r.second = static_cast<double>(hits_b) / n;
  r.first_se = std::sqrt(r.first * (1.0 - r.first) / n);
  r.second_se = std::sqrt(r.second * (1.0 - r.second) / n);
  double md = 0.0;
  for (double x : d) md += x;
  md /= n;
  double ss = 0.0;
  for (double x : d) ss += (x - md) * (x - md);
  r.diff_se = std::sqrt(ss / (n - 1.0) / n);
  r.pass = judge(rule, r.first - r.second, r.diff_se);
  return r;
}

ArraySampler iid_normal_sampler(Eigen::Index rows, Eigen::Index cols) {
  return [rows, cols](Rng& rng) {
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.normal(0.0, 1.0);
    return x;
  };
}

ArraySampler column_effect_sampler(Eigen::Index rows, Eigen::Index cols) {
  return [rows, cols](Rng& rng) {
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double m = rng.normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = m + rng.normal(0.0, 1.0);
    }
    return x;
  };
}

ArraySampler additive_sampler(Eigen::Index rows, Eigen::Index cols) {
  return [rows, cols](Rng& rng) {
    Eigen::VectorXd xi(rows), eta(cols);
    for (Eigen::Index i = 0; i < rows; ++i) xi(i) = rng.normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < cols; ++j) eta(j) = rng.normal(0.0, 1.0);
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        x(i, j) = xi(i) + eta(j) + rng.normal(0.0, 1.0);
      }
    }
    return x;
  };
}

ArraySampler nested_prior_sampler(const nested::NestedModelConfig& config,
                                  Eigen::Index rows, Eigen::Index cols) {
  config.validate();
  return [config, rows, cols](Rng& rng) {
    const auto state = nested::sample_prior(config, rows, cols, rng);
    return nested::sample_data(state, rows, cols, rng);
  };
}

ArraySampler ddp_theta_sampler(const ddp::DdpConfig& config, Eigen::Index rows,
                               Eigen::Index times) {
  config.validate();
  return [config, rows, times](Rng& rng) {
    const auto st = ddp::sample_prior(config, rows, static_cast<int>(times), rng);
    Eigen::MatrixXd x(rows, times);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double b = st.beta.row(st.s[static_cast<std::size_t>(i)]).mean();
      for (Eigen::Index t = 0; t < times; ++t) {
        x(i, t) = st.alpha(i) + st.delta(t) + b;
      }
    }
    return x;
  };
}

LabelSampler nested_label_sampler(const nested::NestedModelConfig& config,
                                  Eigen::Index rows, Eigen::Index cols) {
  config.validate();
  return [config, rows, cols](Rng& rng) {
    const auto state = nested::sample_prior(config, rows, cols, rng);
    Eigen::MatrixXi lab(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const int k = state.partition.subject_labels[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < rows; ++i) lab(i, j) = state.partition.row_labels(k, i);
    }
    return lab;
  };
}

LabelSampler control_label_sampler(const nested::NestedModelConfig& config,
                                   Eigen::Index rows, Eigen::Index cols) {
  config.validate();
  return [config, rows, cols](Rng& rng) {
    const auto state = nested::sample_prior(config, rows, cols, rng);
    Eigen::MatrixXi lab(rows, cols);
    std::vector<double> w(static_cast<std::size_t>(state.L()));
    for (Eigen::Index j = 0; j < cols; ++j) {
      const int k = state.partition.subject_labels[static_cast<std::size_t>(j)];
      for (int l = 0; l < state.L(); ++l) w[static_cast<std::size_t>(l)] = state.w(k, l);
      for (Eigen::Index i = 0; i < rows; ++i) {
        lab(i, j) = static_cast<int>(rng.categorical(w));
      }
    }
    return lab;
  };
}

}  // namespace sepex::exch
