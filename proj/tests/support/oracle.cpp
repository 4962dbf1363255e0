// Apache License, Version 2.0, refer to LICENSE.txt

#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sepex/rng.hpp"
#include "sepex/spline.hpp"
#include "sepex/stick_breaking.hpp"

namespace sepex::testing {

namespace {

constexpr int kGrid = 801;

std::vector<double> normalize(const std::vector<double>& log_w) {
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> p(log_w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::isfinite(log_w[i]) ? std::exp(log_w[i] - mx) : 0.0;
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

void record(OracleResult& r, double tv) {
  r.max_tv = std::max(r.max_tv, tv);
  ++r.evaluations;
}

// Normal conditional of one coordinate of N(mean, P^{-1}) given the rest.
std::pair<double, double> coordinate_conditional(const ddp::GaussianConditional& g,
                                                 const ddp::CoefVector& at, int c) {
  const double pcc = g.precision(c, c);
  double shift = 0.0;
  for (int d = 0; d < ddp::kCoef; ++d) {
    if (d != c) shift += g.precision(c, d) * (at(d) - g.mean(d));
  }
  return {g.mean(c) - shift / pcc, 1.0 / pcc};
}

template <class Setter, class Joint>
double grid_tv(const std::vector<double>& grid, Setter&& set, Joint&& joint,
               const std::vector<double>& impl) {
  std::vector<double> oracle(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    set(grid[g]);
    oracle[g] = joint();
  }
  return tv_from_logs(impl, oracle);
}

}  // namespace

double tv_from_logs(const std::vector<double>& log_a,
                    const std::vector<double>& log_b) {
  const auto a = normalize(log_a);
  const auto b = normalize(log_b);
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return g;
}

NestedToy make_nested_toy(std::uint64_t seed, int rows, int cols, int K, int L) {
  NestedToy toy;
  toy.config.K = K;
  toy.config.L = L;
  toy.config.alpha = 0.8;
  toy.config.beta = 1.3;
  toy.config.atom_prior = {0.5, 0.7, 3.0, 2.0};
  Rng rng(seed);
  toy.state = nested::sample_prior(toy.config, rows, cols, rng);
  toy.y = nested::sample_data(toy.state, rows, cols, rng);
  return toy;
}

ddp::DdpData make_ddp_design(int proteins, std::span<const double> ages,
                             std::span<const int> conditions) {
  const auto [lo, hi] = std::minmax_element(ages.begin(), ages.end());
  const SplineBasis basis = SplineBasis::with_quantile_knots(ages, *lo, *hi);
  return ddp::make_data(
      Eigen::MatrixXd::Zero(proteins, static_cast<Eigen::Index>(ages.size())),
      ages, conditions, basis);
}

DdpToy make_ddp_toy(std::uint64_t seed, int proteins, int H) {
  DdpToy toy;
  toy.config.H = H;
  toy.config.a0 = 3.0;
  toy.config.b0 = 2.0;
  toy.config.omega2 = 0.3;
  toy.config.mu0 = 1.0;
  toy.config.sigma02 = 2.0;
  for (int c = 0; c < ddp::kCoef; ++c) toy.config.beta0(c) = 0.1 * (c % 4);
  const std::array<double, 6> ages{0.0, 0.5, 1.0, 0.0, 0.5, 1.0};
  const std::array<int, 6> cond{0, 0, 0, 1, 1, 1};
  toy.data = make_ddp_design(proteins, ages, cond);
  Rng rng(seed);
  toy.state = ddp::sample_prior(toy.config, proteins, toy.data.T, rng);
  toy.data.y = ddp::sample_data(toy.state, toy.data, rng);
  return toy;
}

OracleResult check_nested_subject_labels(const NestedToy& toy) {
  OracleResult r{"nested S_j", 0.0, 0};
  auto st = toy.state;
  for (std::size_t j = 0; j < st.partition.subject_labels.size(); ++j) {
    const auto impl = nested::subject_label_log_weights(st, toy.y, j);
    std::vector<double> oracle(impl.size());
    const int keep = st.partition.subject_labels[j];
    for (int k = 0; k < st.K(); ++k) {
      st.partition.subject_labels[j] = k;
      oracle[static_cast<std::size_t>(k)] = nested::log_joint(st, toy.y, toy.config);
    }
    st.partition.subject_labels[j] = keep;
    record(r, tv_from_logs(impl, oracle));
  }
  return r;
}

OracleResult check_nested_row_labels(const NestedToy& toy) {
  OracleResult r{"nested M_ik", 0.0, 0};
  auto st = toy.state;
  for (int k = 0; k < st.K(); ++k) {
    for (Eigen::Index i = 0; i < toy.y.rows(); ++i) {
      const auto impl =
          nested::row_label_log_weights(st, toy.y, k, static_cast<std::size_t>(i));
      std::vector<double> oracle(impl.size());
      const int keep = st.partition.row_labels(k, i);
      for (int l = 0; l < st.L(); ++l) {
        st.partition.row_labels(k, i) = l;
        oracle[static_cast<std::size_t>(l)] = nested::log_joint(st, toy.y, toy.config);
      }
      st.partition.row_labels(k, i) = keep;
      record(r, tv_from_logs(impl, oracle));
    }
  }
  return r;
}

OracleResult check_nested_pi_sticks(const NestedToy& toy) {
  OracleResult r{"nested pi sticks", 0.0, 0};
  auto st = toy.state;
  const auto params = stick_posterior(nested::subject_counts(st), toy.config.beta);
  const auto grid = linspace(1e-6, 1.0 - 1e-6, kGrid);
  for (int k = 0; k + 1 < st.K(); ++k) {
    const auto [a, b] = params[static_cast<std::size_t>(k)];
    std::vector<double> impl(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      impl[g] = dist::log_beta_pdf(grid[g], a, b);
    }
    const double keep = st.pi_sticks(k);
    record(r, grid_tv(
                  grid,
                  [&](double v) {
                    st.pi_sticks(k) = v;
                    st.refresh_weights();
                  },
                  [&] { return nested::log_joint(st, toy.y, toy.config); }, impl));
    st.pi_sticks(k) = keep;
    st.refresh_weights();
  }
  return r;
}

OracleResult check_nested_w_sticks(const NestedToy& toy) {
  OracleResult r{"nested w sticks", 0.0, 0};
  auto st = toy.state;
  const auto grid = linspace(1e-6, 1.0 - 1e-6, kGrid);
  for (int k = 0; k < st.K(); ++k) {
    const auto params = stick_posterior(nested::row_counts(st, k), toy.config.alpha);
    for (int l = 0; l + 1 < st.L(); ++l) {
      const auto [a, b] = params[static_cast<std::size_t>(l)];
      std::vector<double> impl(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        impl[g] = dist::log_beta_pdf(grid[g], a, b);
      }
      const double keep = st.w_sticks(k, l);
      record(r, grid_tv(
                    grid,
                    [&](double v) {
                      st.w_sticks(k, l) = v;
                      st.refresh_weights();
                    },
                    [&] { return nested::log_joint(st, toy.y, toy.config); }, impl));
      st.w_sticks(k, l) = keep;
      st.refresh_weights();
    }
  }
  return r;
}

OracleResult check_nested_atoms(const NestedToy& toy) {
  OracleResult r{"nested (mu_l, sigma2_l)", 0.0, 0};
  auto st = toy.state;
  constexpr int n = 161;
  for (int l = 0; l < st.L(); ++l) {
    const auto post = nested::atom_conditional(st, toy.y, toy.config, l);
    const double mode = post.b0 / (post.a0 + 1.0);
    std::vector<double> s2(n);
    for (int g = 0; g < n; ++g) {
      s2[static_cast<std::size_t>(g)] = mode * std::exp(-3.0 + 6.0 * g / (n - 1));
    }
    const double half = 6.0 * std::sqrt(mode / post.kappa0);
    const auto mus = linspace(post.m0 - half, post.m0 + half, n);
    std::vector<double> impl;
    std::vector<double> oracle;
    const double keep_mu = st.mu(l);
    const double keep_s2 = st.sigma2(l);
    for (double m : mus) {
      for (double v : s2) {
        st.mu(l) = m;
        st.sigma2(l) = v;
        // The grid is uniform in log sigma2, so both sides carry the
        // Jacobian v.
        impl.push_back(post.log_density(m, v) + std::log(v));
        oracle.push_back(nested::log_joint(st, toy.y, toy.config) + std::log(v));
      }
    }
    st.mu(l) = keep_mu;
    st.sigma2(l) = keep_s2;
    record(r, tv_from_logs(impl, oracle));
  }
  return r;
}

OracleResult check_ddp_labels(const DdpToy& toy) {
  OracleResult r{"ddp s_i", 0.0, 0};
  auto st = toy.state;
  for (std::size_t i = 0; i < st.s.size(); ++i) {
    const auto impl = ddp::cluster_label_log_weights(st, toy.data, i);
    std::vector<double> oracle(impl.size());
    const int keep = st.s[i];
    for (int h = 0; h < st.H(); ++h) {
      st.s[i] = h;
      oracle[static_cast<std::size_t>(h)] = ddp::log_joint(st, toy.data, toy.config);
    }
    st.s[i] = keep;
    record(r, tv_from_logs(impl, oracle));
  }
  return r;
}

OracleResult check_ddp_sticks(const DdpToy& toy) {
  OracleResult r{"ddp V_h", 0.0, 0};
  auto st = toy.state;
  const auto params = stick_posterior(st.counts(), toy.config.xi);
  const auto grid = linspace(1e-6, 1.0 - 1e-6, kGrid);
  auto refresh = [&] {
    const auto w = weights_from_sticks(
        std::span<const double>(st.V.data(), static_cast<std::size_t>(st.V.size())));
    st.pi = Eigen::Map<const Eigen::VectorXd>(w.data(), st.V.size());
  };
  for (int h = 0; h + 1 < st.H(); ++h) {
    const auto [a, b] = params[static_cast<std::size_t>(h)];
    std::vector<double> impl(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      impl[g] = dist::log_beta_pdf(grid[g], a, b);
    }
    const double keep = st.V(h);
    record(r, grid_tv(
                  grid,
                  [&](double v) {
                    st.V(h) = v;
                    refresh();
                  },
                  [&] { return ddp::log_joint(st, toy.data, toy.config); }, impl));
    st.V(h) = keep;
    refresh();
  }
  return r;
}

OracleResult check_ddp_beta(const DdpToy& toy) {
  OracleResult r{"ddp beta_h (per coordinate)", 0.0, 0};
  auto st = toy.state;
  for (int h = 0; h < st.H(); ++h) {
    const auto g = ddp::beta_conditional(st, toy.data, toy.config, h);
    const ddp::CoefVector at = st.beta.row(h).transpose();
    for (int c = 0; c < ddp::kCoef; ++c) {
      const auto [m, v] = coordinate_conditional(g, at, c);
      const double sd = std::sqrt(v);
      const auto grid = linspace(m - 8.0 * sd, m + 8.0 * sd, kGrid);
      std::vector<double> impl(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        impl[k] = dist::log_normal_pdf(grid[k], m, v);
      }
      record(r, grid_tv(
                    grid, [&](double x) { st.beta(h, c) = x; },
                    [&] { return ddp::log_joint(st, toy.data, toy.config); }, impl));
      st.beta(h, c) = at(c);
    }
  }
  return r;
}

OracleResult check_ddp_sigma2(const DdpToy& toy) {
  OracleResult r{"ddp sigma2_h", 0.0, 0};
  auto st = toy.state;
  for (int h = 0; h < st.H(); ++h) {
    const auto [shape, rate] = ddp::sigma2_conditional(st, toy.data, toy.config, h);
    const double mode = rate / (shape + 1.0);
    std::vector<double> grid(kGrid);
    for (int g = 0; g < kGrid; ++g) {
      grid[static_cast<std::size_t>(g)] = mode * std::exp(-4.0 + 8.0 * g / (kGrid - 1));
    }
    std::vector<double> impl(grid.size());
    std::vector<double> oracle(grid.size());
    const double keep = st.sigma2(h);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      impl[g] = dist::log_inverse_gamma_pdf(grid[g], shape, rate) + std::log(grid[g]);
      st.sigma2(h) = grid[g];
      oracle[g] = ddp::log_joint(st, toy.data, toy.config) + std::log(grid[g]);
    }
    st.sigma2(h) = keep;
    record(r, tv_from_logs(impl, oracle));
  }
  return r;
}

OracleResult check_ddp_delta(const DdpToy& toy) {
  OracleResult r{"ddp delta_t", 0.0, 0};
  auto st = toy.state;
  for (int t = 0; t < toy.data.T; ++t) {
    const auto c = ddp::delta_conditional(st, toy.data, toy.config, t);
    const double sd = std::sqrt(c.var);
    const auto grid = linspace(c.mean - 8.0 * sd, c.mean + 8.0 * sd, kGrid);
    std::vector<double> impl(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      impl[g] = dist::log_normal_pdf(grid[g], c.mean, c.var);
    }
    const double keep = st.delta(t);
    record(r, grid_tv(
                  grid, [&](double x) { st.delta(t) = x; },
                  [&] { return ddp::log_joint(st, toy.data, toy.config); }, impl));
    st.delta(t) = keep;
  }
  return r;
}

OracleResult check_ddp_alpha(const DdpToy& toy) {
  OracleResult r{"ddp alpha_i", 0.0, 0};
  auto st = toy.state;
  for (std::size_t i = 0; i < st.s.size(); ++i) {
    const auto c = ddp::alpha_conditional(st, toy.data, toy.config, i);
    const double sd = std::sqrt(c.var);
    const auto grid = linspace(c.mean - 8.0 * sd, c.mean + 8.0 * sd, kGrid);
    std::vector<double> impl(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      impl[g] = dist::log_normal_pdf(grid[g], c.mean, c.var);
    }
    const auto row = static_cast<Eigen::Index>(i);
    const double keep = st.alpha(row);
    record(r, grid_tv(
                  grid, [&](double x) { st.alpha(row) = x; },
                  [&] { return ddp::log_joint(st, toy.data, toy.config); }, impl));
    st.alpha(row) = keep;
  }
  return r;
}

std::vector<OracleResult> run_all_oracles(int states, std::uint64_t seed) {
  std::vector<OracleResult> worst;
  auto merge = [&](std::size_t slot, const OracleResult& r) {
    if (worst.size() <= slot) worst.push_back({r.name, 0.0, 0});
    worst[slot].max_tv = std::max(worst[slot].max_tv, r.max_tv);
    worst[slot].evaluations += r.evaluations;
  };
  for (int s = 0; s < states; ++s) {
    const auto nt = make_nested_toy(seed + static_cast<std::uint64_t>(s));
    const auto dt = make_ddp_toy(seed + 7919u + static_cast<std::uint64_t>(s));
    std::size_t slot = 0;
    merge(slot++, check_nested_subject_labels(nt));
    merge(slot++, check_nested_row_labels(nt));
    merge(slot++, check_nested_pi_sticks(nt));
    merge(slot++, check_nested_w_sticks(nt));
    merge(slot++, check_nested_atoms(nt));
    merge(slot++, check_ddp_labels(dt));
    merge(slot++, check_ddp_sticks(dt));
    merge(slot++, check_ddp_beta(dt));
    merge(slot++, check_ddp_sigma2(dt));
    merge(slot++, check_ddp_delta(dt));
    merge(slot++, check_ddp_alpha(dt));
  }
  return worst;
}

}  // namespace sepex::testing
