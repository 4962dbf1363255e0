// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/partition.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "sepex/error.hpp"

namespace sepex {

Partition Partition::from_labels(std::span<const int> labels) {
  if (labels.empty()) {
    throw ValidationError("cannot build a partition of zero items");
  }
  Partition p;
  p.labels_.resize(labels.size());
  std::unordered_map<int, int> relabel;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw ValidationError("negative label at item " + std::to_string(i));
    }
    auto [it, inserted] = relabel.try_emplace(labels[i], p.num_clusters_);
    if (inserted) ++p.num_clusters_;
    p.labels_[i] = it->second;
  }
  return p;
}

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters_), 0);
  for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

Partition canonicalize(std::span<const int> labels) {
  return Partition::from_labels(labels);
}

void validate_coclustering(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw ValidationError("co-clustering matrix must be square");
  }
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(m(i, i) - 1.0) > 1e-12) {
      throw ValidationError("co-clustering diagonal must be 1 (row " +
                            std::to_string(i) + ")");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = m(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("co-clustering entry out of [0,1] at (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ")");
      }
      if (std::abs(v - m(j, i)) > 1e-12) {
        throw ValidationError("co-clustering matrix is not symmetric");
      }
    }
  }
}

double binder_loss(const Partition& p, const Eigen::MatrixXd& coclust) {
  validate_coclustering(coclust);
  if (static_cast<std::size_t>(coclust.rows()) != p.size()) {
    throw ValidationError("partition and co-clustering sizes differ");
  }
  const std::size_t n = p.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (p.same_cluster(i, j) ? 1.0 : 0.0) -
                       coclust(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(j));
      loss += d * d;
    }
  }
  return loss;
}

Eigen::MatrixXd coclustering_matrix(std::span<const Partition> draws) {
  if (draws.empty()) {
    throw ValidationError("co-clustering needs at least one draw");
  }
  const auto n = static_cast<Eigen::Index>(draws.front().size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const Partition& p : draws) {
    if (static_cast<Eigen::Index>(p.size()) != n) {
      throw ValidationError("draws cover different numbers of items");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (p[static_cast<std::size_t>(i)] == p[static_cast<std::size_t>(j)]) {
          counts(i, j) += 1.0;
        }
      }
    }
  }
  counts /= static_cast<double>(draws.size());
  Eigen::MatrixXd out = counts + counts.transpose().eval();
  out.diagonal().setOnes();
  return out;
}

Partition NestedPartitionState::subject_partition() const {
  return Partition::from_labels(subject_labels);
}

Partition NestedPartitionState::row_partition(std::size_t j) const {
  const int k = subject_labels.at(j);
  std::vector<int> labels(num_rows());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = row_labels(k, static_cast<Eigen::Index>(i));
  }
  return Partition::from_labels(labels);
}

void NestedPartitionState::validate() const {
  if (K < 1 || L < 1) {
    throw ValidationError("nested partition truncations must be >= 1");
  }
  if (row_labels.rows() != K) {
    throw ValidationError("row label matrix must have K rows");
  }
  for (std::size_t j = 0; j < subject_labels.size(); ++j) {
    if (subject_labels[j] < 0 || subject_labels[j] >= K) {
      throw ValidationError("subject label out of range at column " +
                            std::to_string(j));
    }
  }
  for (Eigen::Index k = 0; k < row_labels.rows(); ++k) {
    for (Eigen::Index i = 0; i < row_labels.cols(); ++i) {
      if (row_labels(k, i) < 0 || row_labels(k, i) >= L) {
        throw ValidationError("row label out of range at (" +
                              std::to_string(k) + "," + std::to_string(i) +
                              ")");
      }
    }
  }
}

}  // namespace sepex
