// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sepex/nested.hpp"
#include "sepex/rng.hpp"

namespace sepex::sim {

/// Three-cluster protein trajectory truth. Cluster means:
///   h = 0: alpha + 2t + 3t^3,  h = 1: alpha - 2t + t^3,
///   h = 2: alpha + t - 3t^3,
/// plus a subject effect delta_j and N(0, noise_sd_h^2) noise.
struct ProteinSimTruth {
  std::size_t J = 20;
  std::size_t I = 100;
  std::array<double, 3> pi{0.25, 0.30, 0.45};
  std::array<double, 3> alpha_tilde{0.0, -3.0, 1.0};
  double delta_sd = 0.1;
  std::array<double, 3> noise_sd{0.2, 0.5, 1.0};
  /// Replaces the random subject effects when set (length J).
  std::optional<std::vector<double>> delta_override;
  /// 0: t_j ~ U(0, 1) with every z_j = 0 (no patient/control split). T > 1: paired design with J = 2T
  /// subjects, one control and one patient at each of t = k / (T - 1).
  std::size_t paired_times = 0;
  /// Patient slope per cluster, adds z_j * effect_h * t_j (zero by default).
  std::array<double, 3> patient_effect{0.0, 0.0, 0.0};

  void validate() const;
};

/// Noiseless cluster mean without alpha and delta.
double protein_curve(int cluster, double t);

struct ProteinSim {
  Eigen::MatrixXd y;          // I x J
  std::vector<double> t;      // J
  std::vector<int> z;         // J
  std::vector<int> s;         // I true clusters in {0, 1, 2}
  std::vector<double> delta;  // J
  std::vector<double> alpha;  // I, equal to alpha_tilde of the cluster
};

ProteinSim simulate_protein(const ProteinSimTruth& truth, Rng& rng);

struct NestedSim {
  Eigen::MatrixXd y;  // I x J
  nested::NestedState state;
  std::vector<int> S;  // J
  Eigen::MatrixXi M;   // I x J: row label of cell (i, j), M(S_j, i)
};

/// Prior-predictive draw of the nested model. With `separation` set, atoms
/// are overridden to mu_l = separation * l and sigma2_l = 1.
NestedSim simulate_nested(const nested::NestedModelConfig& config,
                          std::size_t I, std::size_t J, Rng& rng,
                          std::optional<double> separation = std::nullopt);

/// Data from the likelihood given a fixed state.
NestedSim simulate_from_state(const nested::NestedState& state, std::size_t I,
                              std::size_t J, Rng& rng);

}  // namespace sepex::sim
