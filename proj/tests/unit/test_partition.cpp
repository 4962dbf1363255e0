// Apache License, Version 2.0, refer to LICENSE.txt

#include <vector>

#include <doctest.h>

#include "sepex/error.hpp"
#include "sepex/partition.hpp"
#include "sepex/rng.hpp"

using namespace sepex;

TEST_CASE("canonicalize relabels by first appearance") {
  CHECK(canonicalize(std::vector{5, 5, 2}).labels() == std::vector{0, 0, 1});
  CHECK(canonicalize(std::vector{0, 1, 2}).labels() == std::vector{0, 1, 2});
  CHECK(canonicalize(std::vector{3, 1, 3, 1}).labels() == std::vector{0, 1, 0, 1});
  CHECK(canonicalize(std::vector{3, 1, 3, 1}).num_clusters() == 2);
  CHECK_THROWS_AS(canonicalize(std::vector<int>{}), ValidationError);
  CHECK_THROWS_AS(canonicalize(std::vector{0, -1}), ValidationError);
}

TEST_CASE("canonicalize is idempotent and keeps blocks") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<int> raw(12);
    for (int& v : raw) v = static_cast<int>(rng.uniform() * 7.0);
    const auto p = canonicalize(raw);
    CHECK(canonicalize(p.labels()) == p);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (std::size_t j = 0; j < raw.size(); ++j) {
        CHECK((raw[i] == raw[j]) == p.same_cluster(i, j));
      }
    }
  }
}

TEST_CASE("binder loss") {
  const auto singletons = canonicalize(std::vector{0, 1, 2});
  CHECK(binder_loss(singletons, Eigen::MatrixXd::Identity(3, 3)) == 0.0);
  const auto one = canonicalize(std::vector{0, 0, 0});
  CHECK(binder_loss(one, Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(3.0));
  Eigen::MatrixXd block(4, 4);
  block << 1, 0.9, 0.1, 0.1, 0.9, 1, 0.1, 0.1, 0.1, 0.1, 1, 0.9, 0.1, 0.1, 0.9, 1;
  CHECK(binder_loss(canonicalize(std::vector{0, 0, 1, 1}), block) == doctest::Approx(0.06));
}

TEST_CASE("coclustering matrix") {
  const std::vector<Partition> single{canonicalize(std::vector{0, 0, 1})};
  Eigen::MatrixXd expect(3, 3);
  expect << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK(coclustering_matrix(single) == expect);
  const std::vector<Partition> two{canonicalize(std::vector{0, 0}),
                                   canonicalize(std::vector{0, 1})};
  CHECK(coclustering_matrix(two)(0, 1) == 0.5);

  // Two equally weighted labels: P(i ~ j) = 0.5.
  Rng rng(12);
  std::vector<Partition> draws;
  for (int m = 0; m < 2000; ++m) {
    std::vector<int> lab(3);
    for (int& v : lab) v = rng.uniform() < 0.5 ? 0 : 1;
    draws.push_back(canonicalize(lab));
  }
  const auto cc = coclustering_matrix(draws);
  for (int i = 0; i < 3; ++i) {
    CHECK(cc(i, i) == 1.0);
    for (int j = 0; j < 3; ++j) {
      CHECK(cc(i, j) == cc(j, i));
      if (i != j) CHECK(std::abs(cc(i, j) - 0.5) < 0.03);
    }
  }
  for (const auto& p : draws) {
    const std::vector<Partition> just{p};
    CHECK(binder_loss(p, coclustering_matrix(just)) == 0.0);
  }
}

TEST_CASE("nested partition state") {
  NestedPartitionState s;
  s.K = 2;
  s.L = 3;
  s.subject_labels = {1, 0, 1};
  s.row_labels.resize(2, 4);
  s.row_labels << 0, 0, 1, 2, 2, 1, 1, 0;
  s.validate();
  CHECK(s.subject_partition().labels() == std::vector{0, 1, 0});
  CHECK(s.row_partition(0) == s.row_partition(2));
  CHECK(s.row_partition(0).labels() == std::vector{0, 1, 1, 2});
  s.row_labels(0, 0) = 3;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
