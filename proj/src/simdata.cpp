// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/simdata.hpp"

#include <cmath>
#include <string>

#include "sepex/error.hpp"

namespace sepex::sim {

void ProteinSimTruth::validate() const {
  if (I == 0) throw ParameterError("simulation needs at least one protein");
  double sum = 0.0;
  for (double p : pi) {
    if (!(p >= 0.0)) throw ParameterError("cluster weights must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ParameterError("cluster weights must sum to 1");
  }
  for (double s : noise_sd) {
    if (!(s >= 0.0)) throw ParameterError("noise sd must be nonnegative");
  }
  if (!(delta_sd >= 0.0)) throw ParameterError("delta sd must be nonnegative");
  if (paired_times == 1) throw ParameterError("paired design needs at least 2 times");
  const std::size_t subjects = paired_times > 1 ? 2 * paired_times : J;
  if (subjects == 0) throw ParameterError("simulation needs at least one subject");
  if (delta_override && delta_override->size() != subjects) {
    throw ParameterError("delta override must have one entry per subject (" +
                         std::to_string(subjects) + ")");
  }
}

double protein_curve(int cluster, double t) {
  const double t3 = t * t * t;
  switch (cluster) {
    case 0: return 2.0 * t + 3.0 * t3;
    case 1: return -2.0 * t + t3;
    case 2: return t - 3.0 * t3;
  }
  throw ParameterError("protein cluster must be 0, 1 or 2");
}

ProteinSim simulate_protein(const ProteinSimTruth& truth, Rng& rng) {
  truth.validate();
  ProteinSim out;
  if (truth.paired_times > 1) {
    const std::size_t T = truth.paired_times;
    for (std::size_t k = 0; k < T; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(T - 1);
      for (int z = 0; z < 2; ++z) {
        out.t.push_back(t);
        out.z.push_back(z);
      }
    }
  } else {
    for (std::size_t j = 0; j < truth.J; ++j) {
      out.t.push_back(rng.uniform());
      out.z.push_back(0);
    }
  }
  const std::size_t J = out.t.size();
  if (truth.delta_override) {
    out.delta = *truth.delta_override;
  } else {
    for (std::size_t j = 0; j < J; ++j) out.delta.push_back(truth.delta_sd * rng.normal(0.0, 1.0));
  }
  out.y.resize(static_cast<Eigen::Index>(truth.I), static_cast<Eigen::Index>(J));
  for (std::size_t i = 0; i < truth.I; ++i) {
    const int h = static_cast<int>(rng.categorical(truth.pi));
    const auto hh = static_cast<std::size_t>(h);
    out.s.push_back(h);
    out.alpha.push_back(truth.alpha_tilde[hh]);
    for (std::size_t j = 0; j < J; ++j) {
      const double mean = truth.alpha_tilde[hh] + protein_curve(h, out.t[j]) +
                          out.z[j] * truth.patient_effect[hh] * out.t[j] +
                          out.delta[j];
      out.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mean + truth.noise_sd[hh] * rng.normal(0.0, 1.0);
    }
  }
  return out;
}

NestedSim simulate_from_state(const nested::NestedState& state, std::size_t I,
                              std::size_t J, Rng& rng) {
  NestedSim out;
  out.state = state;
  out.y = nested::sample_data(state, static_cast<Eigen::Index>(I),
                              static_cast<Eigen::Index>(J), rng);
  out.S = state.partition.subject_labels;
  out.M.resize(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J));
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t i = 0; i < I; ++i) {
      out.M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          state.partition.row_labels(out.S[j], static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

NestedSim simulate_nested(const nested::NestedModelConfig& config,
                          std::size_t I, std::size_t J, Rng& rng,
                          std::optional<double> separation) {
  config.validate();
  if (I == 0 || J == 0) throw ParameterError("simulation needs I, J >= 1");
  if (separation && !(*separation >= 0.0)) {
    throw ParameterError("separation must be nonnegative");
  }
  auto state = nested::sample_prior(config, static_cast<Eigen::Index>(I),
                                    static_cast<Eigen::Index>(J), rng);
  if (separation) {
    for (Eigen::Index l = 0; l < state.mu.size(); ++l) {
      state.mu(l) = *separation * static_cast<double>(l);
      state.sigma2(l) = 1.0;
    }
  }
  return simulate_from_state(state, I, J, rng);
}

}  // namespace sepex::sim
