// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "brute.hpp"
#include "oracle.hpp"
#include "sepex/error.hpp"
#include "sepex/simdata.hpp"
#include "sepex/summary.hpp"

using namespace sepex;

namespace {

Partition part(std::vector<int> v) { return Partition::from_labels(v); }

}  // namespace

TEST_CASE("set partition enumeration gives the Bell numbers") {
  const int bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int n = 1; n <= 8; ++n) {
    CHECK(testing::all_set_partitions(n).size() == static_cast<std::size_t>(bell[n]));
  }
}

TEST_CASE("Dahl estimate attains the global Binder minimum") {
  Rng rng(301);
  int greedy_or_sampled_optimal = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 7;
    const auto draws = testing::random_partition_draws(n, 10 + rep, rng);
    const auto cc = coclustering_matrix(draws);
    const auto best = testing::brute_binder(cc);
    const auto est = summary::dahl_point_estimate(draws);
    CHECK(est.loss == doctest::Approx(best.loss).epsilon(1e-12));
    CHECK(binder_loss(est.partition, cc) == doctest::Approx(est.loss).epsilon(1e-12));
    const bool listed =
        std::any_of(best.minimizers.begin(), best.minimizers.end(),
                    [&](const auto& m) { return part(m) == est.partition; });
    CHECK(listed);
    // Never worse than the best sampled draw.
    double sampled = INFINITY;
    for (const auto& d : draws) sampled = std::min(sampled, binder_loss(d, cc));
    CHECK(est.loss <= sampled + 1e-12);
    greedy_or_sampled_optimal += est.source != summary::PointSource::exhaustive;
  }
  MESSAGE("optimum found before enumeration in ", greedy_or_sampled_optimal, " of 50 cases");
}

TEST_CASE("Dahl estimate above the enumeration limit uses greedy moves") {
  Rng rng(302);
  const auto draws = testing::random_partition_draws(30, 200, rng);
  const auto est = summary::dahl_point_estimate(draws);
  CHECK(est.source != summary::PointSource::exhaustive);
  const auto cc = coclustering_matrix(draws);
  for (const auto& d : draws) CHECK(est.loss <= binder_loss(d, cc) + 1e-12);
  // Local optimum: no single move lowers the loss.
  CHECK(binder_loss(summary::greedy_binder(est.partition, cc), cc) ==
        doctest::Approx(est.loss).epsilon(1e-12));
}

TEST_CASE("cluster count mode and misclassification") {
  const std::vector<Partition> draws{part({0, 0, 1}), part({0, 1, 2}), part({0, 0, 0}),
                                     part({0, 1, 1})};
  CHECK(summary::map_cluster_count(draws) == 2);
  const std::vector<Partition> tie{part({0, 0}), part({0, 1})};
  CHECK(summary::map_cluster_count(tie) == 1);
  CHECK(summary::misclassification_count(part({0, 0, 1, 1}), part({1, 1, 0, 0})) == 0);
  CHECK(summary::misclassification_count(part({0, 0, 1, 1}), part({0, 0, 0, 1})) == 1);
  CHECK(summary::misclassification_count(part({0, 1, 2, 3}), part({0, 0, 0, 0})) == 3);
}

TEST_CASE("rank estimator matches exhaustive hand computation") {
  Rng rng(303);
  const int cs[][2] = {{1, 2}, {3, 5}, {3, 4}, {4, 5}, {9, 10}};
  for (int rep = 0; rep < 20; ++rep) {
    const int M = 1 + rep % 5;
    const int I = 2 + rep % 5;
    const auto g = testing::random_gamma_draws(M, I, rng);
    const auto [num, den] = cs[rep % 5];
    const double c = static_cast<double>(num) / den;
    const auto got = summary::rank_quantile(g, c);
    const auto want = testing::brute_rank(g, num, den, summary::top_set_size(c, I));
    for (int i = 0; i < I; ++i) {
      CHECK(got.exceed_prob(i) == want.exceed_prob[static_cast<std::size_t>(i)]);
    }
    CHECK(got.r_star == want.r_star);
    auto sel = got.selected;
    std::sort(sel.begin(), sel.end());
    CHECK(sel == want.selected);
  }
}

TEST_CASE("rank estimator examples") {
  const std::vector<double> p{0.9, 0.1, 0.5};
  CHECK(summary::ascending_ranks(p) == std::vector{3, 1, 2});
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(4, 5, 1.5);
  const auto r = summary::rank_quantile(same, 0.5);
  CHECK(r.r_star == std::vector{1, 2, 3, 4, 5});
  CHECK(summary::top_set_size(0.975, 4350) == 109);
  CHECK(summary::top_set_size(0.5, 3) == 2);
  CHECK(summary::rank_quantile(same, 0.5, 1).selected == std::vector<std::size_t>{4});
  CHECK_THROWS_AS(summary::rank_quantile(same, 1.0), ParameterError);

  // I = 4, M = 3 hand example at c = 0.5: P = R / 5 > 0.5 means R >= 3.
  Eigen::MatrixXd g(3, 4);
  g << 0.1, -2.0, 0.5, 1.0,   // ranks 1 4 2 3
      0.3, 0.2, -0.1, 4.0,    // ranks 3 2 1 4
      -1.0, 1.0, 0.0, 2.0;    // ranks 2 3 1 4 (tie |-1| = |1| by index)
  const auto h = summary::rank_quantile(g, 0.5);
  CHECK(h.exceed_prob(0) == doctest::Approx(1.0 / 3.0));
  CHECK(h.exceed_prob(1) == doctest::Approx(2.0 / 3.0));
  CHECK(h.exceed_prob(2) == doctest::Approx(0.0));
  CHECK(h.exceed_prob(3) == doctest::Approx(1.0));
  CHECK(h.r_star == std::vector{2, 3, 1, 4});
  CHECK(h.selected == std::vector<std::size_t>{3, 1, 0});
}

TEST_CASE("rank estimator is monotone in one protein's draws") {
  Rng rng(304);
  for (int rep = 0; rep < 50; ++rep) {
    auto g = testing::random_gamma_draws(5, 6, rng);
    const auto before = summary::rank_quantile(g, 0.6);
    const int i = rep % 6;
    for (int m = 0; m < 5; ++m) g(m, i) = std::abs(g(m, i)) + 1.0;
    const auto after = summary::rank_quantile(g, 0.6);
    CHECK(after.r_star[static_cast<std::size_t>(i)] >= before.r_star[static_cast<std::size_t>(i)]);
    auto perm = after.r_star;
    std::sort(perm.begin(), perm.end());
    for (int k = 0; k < 6; ++k) CHECK(perm[static_cast<std::size_t>(k)] == k + 1);
  }
}

TEST_CASE("naive gamma") {
  std::vector<double> ages;
  std::vector<int> cond;
  for (int t = 1; t <= 16; ++t) {
    ages.push_back(t);
    cond.push_back(0);
    ages.push_back(t);
    cond.push_back(1);
  }
  auto d = testing::make_ddp_design(3, ages, cond);
  d.y.setConstant(4.0);
  // Protein 1: patient 1 -> 17, control 2 -> 2.
  d.y(1, 1) = 1.0;
  d.y(1, 31) = 17.0;
  d.y(1, 0) = 2.0;
  d.y(1, 30) = 2.0;
  // Protein 2: identical patient and control trajectories.
  for (int t = 0; t < 16; ++t) {
    d.y(2, 2 * t) = t * 0.5;
    d.y(2, 2 * t + 1) = t * 0.5;
  }
  const auto g = summary::naive_gamma_hat(d);
  CHECK(g(0) == 0.0);
  CHECK(g(1) == doctest::Approx(16.0 / 15.0));
  CHECK(g(2) == 0.0);
}

TEST_CASE("nested coclustering") {
  auto draw = [](std::vector<int> S, Eigen::MatrixXi M) {
    nested::NestedDraw d;
    d.S = std::move(S);
    d.M = std::move(M);
    return d;
  };
  Eigen::MatrixXi same(1, 2);
  same << 0, 0;
  Eigen::MatrixXi split(1, 2);
  split << 0, 1;
  const std::vector<nested::NestedDraw> draws{draw({0, 0}, same), draw({0, 0}, same),
                                             draw({0, 0}, split), draw({0, 0}, same)};
  const auto p = summary::nested_coclustering(draws, part({0, 0}));
  REQUIRE(p.size() == 1);
  CHECK(p[0](0, 1) == 0.75);
  CHECK(p[0](1, 0) == 0.75);
  CHECK(p[0](0, 0) == 1.0);
  CHECK_THROWS_AS(summary::nested_coclustering(draws, part({0, 1})), ValidationError);
}

TEST_CASE("Rao-Blackwell and Monte Carlo gamma agree") {
  sim::ProteinSimTruth truth;
  truth.I = 30;
  truth.paired_times = 6;
  truth.patient_effect = {1.0, -1.0, 0.0};
  Rng rng(305);
  const auto s = sim::simulate_protein(truth, rng);
  std::vector<double> ages(s.t.begin(), s.t.end());
  auto d = testing::make_ddp_design(static_cast<int>(truth.I), ages, s.z);
  d.y = s.y;
  const ddp::DdpConfig cfg;
  const auto chain = ddp::run_chain(d, cfg, {3000, 1000, 1}, rng);
  const auto rb = summary::rao_blackwell_gamma(chain.draws, d, cfg);
  const auto mc = summary::mean_gamma(chain.draws);
  const double rel = (rb - mc).norm() / mc.norm();
  CHECK(rel < 0.05);
  // Single draw: the plug-in value from the beta conditional mean.
  const std::vector<ddp::DdpDraw> one{chain.draws.back()};
  const auto rb1 = summary::rao_blackwell_gamma(one, d, cfg);
  ddp::DdpState st;
  const auto& last = chain.draws.back();
  st.s = last.s;
  st.pi = last.pi;
  st.V = Eigen::VectorXd::Ones(last.pi.size());
  st.beta = last.beta;
  st.sigma2 = last.sigma2;
  st.delta = last.delta;
  st.alpha = last.alpha;
  const auto contrast = ddp::gamma_contrast(d);
  for (Eigen::Index i = 0; i < d.num_proteins(); ++i) {
    const auto g = ddp::beta_conditional(st, d, cfg, last.s[static_cast<std::size_t>(i)]);
    CHECK(rb1(i) == doctest::Approx(contrast.dot(g.mean.tail<6>())).epsilon(1e-10));
    for (Eigen::Index k = 0; k < d.num_proteins(); ++k) {
      if (last.s[static_cast<std::size_t>(k)] == last.s[static_cast<std::size_t>(i)]) {
        CHECK(rb1(k) == rb1(i));
      }
    }
  }
}

TEST_CASE("fit diagnostics") {
  // Zero noise with a known single-cluster fit: residuals vanish.
  std::vector<double> ages{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> cond(5, 0);
  auto d = testing::make_ddp_design(4, ages, cond);
  ddp::DdpDraw draw;
  draw.s = {0, 0, 0, 0};
  draw.pi = Eigen::VectorXd::Ones(1);
  draw.beta = ddp::AtomMatrix::Zero(1, ddp::kCoef);
  draw.beta.row(0).head<6>() << 0.0, 1.0, -0.5, 2.0, 0.5, 1.0;
  draw.sigma2 = Eigen::VectorXd::Constant(1, 0.1);
  draw.delta = Eigen::VectorXd::Zero(d.T);
  draw.alpha = Eigen::VectorXd::Constant(4, 1.0);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) d.y(i, j) = 1.0 + d.design.x.row(j).dot(draw.beta.row(0));
  }
  const std::vector<ddp::DdpDraw> draws(50, draw);
  Rng rng(306);
  const auto f = summary::fit_diagnostics(draws, d, part({0, 0, 0, 0}), rng);
  for (double r : f.residuals) CHECK(std::abs(r) < 1e-12);
  CHECK(f.r2_per_cluster.at(0) == doctest::Approx(1.0));
  CHECK(f.cluster_sizes.at(0) == 4);

  // Normal sample passes, a shifted one does not.
  Rng g(307);
  std::vector<double> z(2000);
  for (double& v : z) v = g.normal(0.0, 1.0);
  CHECK(dist::kolmogorov_pvalue(summary::ks_statistic_normal(z), z.size()) > 0.01);
  for (double& v : z) v += 0.3;
  CHECK(dist::kolmogorov_pvalue(summary::ks_statistic_normal(z), z.size()) < 0.01);
  // KS statistic against an independent brute-force computation.
  std::vector<double> small{-1.2, 0.3, 0.1, 2.0, -0.4};
  std::sort(small.begin(), small.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < small.size(); ++i) {
    const double F = 0.5 * std::erfc(-small[i] / std::sqrt(2.0));
    dmax = std::max({dmax, F - static_cast<double>(i) / 5.0, static_cast<double>(i + 1) / 5.0 - F});
  }
  CHECK(summary::ks_statistic_normal(small) == doctest::Approx(dmax).epsilon(1e-12));
  const auto qq = summary::normal_qq(small);
  CHECK(qq.size() == 5);
  CHECK(qq[2].first == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(qq[0].second == -1.2);
}

TEST_CASE("fit diagnostics on a simulated run" * doctest::timeout(120)) {
  Rng rng(308);
  const auto s = sim::simulate_protein(sim::ProteinSimTruth{}, rng);
  const auto basis = SplineBasis::with_quantile_knots(s.t, 0.0, 1.0);
  const auto d = ddp::make_data(s.y, s.t, s.z, basis);
  const auto chain = ddp::run_chain(d, ddp::DdpConfig{}, {4000, 1000, 1}, rng);
  std::vector<Partition> draws;
  for (const auto& x : chain.draws) draws.push_back(Partition::from_labels(x.s));
  const auto point = summary::dahl_point_estimate(draws).partition;
  const auto f = summary::fit_diagnostics(chain.draws, d, point, rng);
  MESSAGE("mean R2 ", f.mean_r2(), ", KS p ", f.ks_pvalue);
  for (std::size_t h = 0; h < f.r2_per_cluster.size(); ++h) {
    MESSAGE("cluster size ", f.cluster_sizes[h], " R2 ", f.r2_per_cluster[h]);
  }
  CHECK(f.ks_pvalue > 0.01);
  // Only the steep, low-noise curve (5t, sd 0.2) explains most of its
  // variance; the flat curves sit below their noise level.
  CHECK(*std::max_element(f.r2_per_cluster.begin(), f.r2_per_cluster.end()) > 0.9);
  for (double r2 : f.r2_per_cluster) CHECK(r2 <= 1.0);
}
