// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sepex {

/// Flat partition of n items stored as dense labels in canonical form:
/// labels are assigned in order of first appearance, so item 0 always has
/// label 0 and each new block gets 1 + the current maximum.
class Partition {
 public:
  Partition() = default;

  /// Canonicalizes `labels`. Throws ValidationError on empty or negative
  /// input.
  static Partition from_labels(std::span<const int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  int num_clusters() const noexcept { return num_clusters_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  std::vector<std::size_t> cluster_sizes() const;

  bool same_cluster(std::size_t i, std::size_t j) const {
    return labels_[i] == labels_[j];
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> labels_;
  int num_clusters_ = 0;
};

Partition canonicalize(std::span<const int> labels);

/// Sum over unordered pairs of (1[same block] - coclust(i, j))^2.
/// `coclust` must be symmetric with entries in [0, 1] and a unit diagonal.
double binder_loss(const Partition& p, const Eigen::MatrixXd& coclust);

/// Fraction of draws placing each pair of items in the same block.
Eigen::MatrixXd coclustering_matrix(std::span<const Partition> draws);

/// Throws ValidationError unless `m` is square, symmetric, within [0, 1] and
/// has a unit diagonal.
void validate_coclustering(const Eigen::MatrixXd& m);

/// Latent labels of the nested model: a column partition (raw labels
/// S_j in [0, K)) and, for every column cluster k, a row labelling
/// M(k, i) in [0, L). Rows of M exist for empty column clusters too.
struct NestedPartitionState {
  std::vector<int> subject_labels;  // length J
  Eigen::MatrixXi row_labels;       // K x I
  int K = 0;
  int L = 0;

  std::size_t num_subjects() const { return subject_labels.size(); }
  std::size_t num_rows() const {
    return static_cast<std::size_t>(row_labels.cols());
  }

  Partition subject_partition() const;
  /// Row partition induced in column j, i.e. the canonical form of
  /// M(S_j, .). Columns sharing a cluster share this partition.
  Partition row_partition(std::size_t j) const;
  /// Validates label ranges and dimensions.
  void validate() const;
};

}  // namespace sepex
