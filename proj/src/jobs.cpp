// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/jobs.hpp"

#include <chrono>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sepex/error.hpp"
#include "sepex/exch.hpp"
#include "sepex/io.hpp"
#include "sepex/simdata.hpp"
#include "sepex/summary.hpp"
#include "sepex/version.hpp"

namespace sepex::jobs {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kConditionalStream = 1000;
constexpr std::uint64_t kDiagnoseStream = 2000;

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParameterError(std::string("option '") + key + "' has the wrong type");
  }
}

std::string require_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw ParameterError(std::string("missing option '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

// Relative paths in options loaded from a file resolve against that file.
fs::path resolve(const Json& j, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || !j.contains("base_dir")) return path;
  return fs::path(j.at("base_dir").get<std::string>()) / path;
}

std::optional<std::size_t> chain_option(const Json& j) {
  if (!j.contains("chain") || j.at("chain").is_null()) return std::nullopt;
  return j.at("chain").get<std::size_t>();
}

std::string pad_id(const char* stem, std::size_t k, std::size_t n) {
  std::string num = std::to_string(k + 1);
  const std::size_t width = std::to_string(n).size();
  return stem + std::string(width > num.size() ? width - num.size() : 0, '0') + num;
}

// Runs `body(c)` for every chain on its own thread; rethrows the first
// failure in chain order.
template <typename Body>
void for_each_chain(std::size_t chains, Body body) {
  std::vector<std::exception_ptr> errors(chains);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        body(c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (std::size_t c = 0; c < chains; ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const Error& e) {
      if (chains == 1) throw;
      const std::string msg = "chain " + std::to_string(c) + ": " + e.what();
      switch (e.kind()) {
        case ErrorKind::parameter: throw ParameterError(msg);
        case ErrorKind::validation: throw ValidationError(msg);
        case ErrorKind::numerical: throw NumericalError(msg);
        case ErrorKind::io: throw IoError(msg);
      }
      throw;
    }
  }
}

Json base_manifest(const std::string& model, std::uint64_t seed, std::size_t chains,
                   const RunSettings& run) {
  Json m;
  m["format_version"] = io::kFormatVersion;
  m["storage"] = "csv";
  m["software"] = "sepex";
  m["version"] = kVersion;
  m["model"] = model;
  m["seed"] = seed;
  m["chains"] = chains;
  m["run"] = io::to_json(run);
  return m;
}

void write_timing(const fs::path& out, double seconds) {
  Json t;
  t["wall_seconds"] = seconds;
  io::write_text(out / "timing.json", t.dump(2) + "\n");
}

std::vector<Partition> pooled_partitions(const std::vector<nested::NestedChain>& chains) {
  std::vector<Partition> out;
  for (const auto& c : chains) {
    for (const auto& d : c.draws) out.push_back(Partition::from_labels(d.S));
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& ids) {
  std::string out = "id";
  for (const auto& id : ids) out += "," + id;
  out += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + io::format_double(m(i, j));
    out += "\n";
  }
  return out;
}

Json point_json(const summary::PointEstimate& p) {
  Json j;
  j["source"] = summary::to_string(p.source);
  j["binder_loss"] = p.loss;
  j["clusters"] = p.partition.num_clusters();
  j["cluster_sizes"] = p.partition.cluster_sizes();
  return j;
}

// ---- nested --------------------------------------------------------------

struct NestedJobData {
  io::MatrixTable table;
  io::Normalization normalization = io::Normalization::none;
  bool log_transform = false;
};

NestedJobData load_nested_data(const Json& o) {
  NestedJobData d;
  const fs::path path = resolve(o, require_string(o, "data"));
  d.normalization = io::parse_normalization(get_or<std::string>(o, "normalization", "none"));
  d.log_transform = get_or(o, "log_transform", false);
  if (d.normalization == io::Normalization::none && !d.log_transform) {
    d.table = io::load_matrix_csv(path);
  } else {
    const auto otu = io::load_otu_csv(path, d.normalization, d.log_transform);
    d.table = {otu.row_ids, otu.subject_ids, otu.y};
  }
  return d;
}

nested::NestedModelConfig nested_config(const Json& o, const Eigen::MatrixXd& y) {
  nested::NestedModelConfig c;
  if (get_or(o, "empirical_bayes", true)) c = nested::NestedModelConfig::empirical_bayes(y);
  if (o.contains("config")) io::from_json(o.at("config"), c);
  c.validate();
  return c;
}

Json write_nested_archive(const fs::path& out, const Json& o, const io::MatrixTable& table,
                          const nested::NestedModelConfig& cfg, const RunSettings& run,
                          std::uint64_t seed, std::size_t chains,
                          const std::optional<std::vector<int>>& frozen, std::uint64_t stream0) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<nested::NestedChain> results(chains);
  for_each_chain(chains, [&](std::size_t c) {
    Rng rng(seed, stream0 + c);
    results[c] = nested::run_chain(table.y, cfg, run, rng, frozen);
  });
  fs::create_directories(out);
  io::write_matrix_csv(out / io::kDataFile, table);
  for (std::size_t c = 0; c < chains; ++c) {
    io::write_nested_chain(io::chain_dir(out, c), results[c]);
  }
  Json m = base_manifest("nested", seed, chains, run);
  m["stream_offset"] = stream0;
  m["config"] = io::to_json(cfg);
  m["empirical_bayes"] = false;
  m["data"] = io::kDataFile;
  m["normalization"] = "none";
  m["log_transform"] = false;
  m["source"] = o.contains("source")
                    ? o.at("source")
                    : Json{{"data", get_or<std::string>(o, "data", "")},
                           {"normalization", get_or<std::string>(o, "normalization", "none")},
                           {"log_transform", get_or(o, "log_transform", false)}};
  m["dims"] = {{"I", table.y.rows()}, {"J", table.y.cols()}};
  m["draws_per_chain"] = run.num_retained();
  m["frozen_labels"] = frozen ? Json(*frozen) : Json(nullptr);
  io::write_text(out / io::kManifestFile, m.dump(2) + "\n");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_timing(out, secs);

  Json r;
  r["archive"] = out.string();
  r["model"] = "nested";
  r["chains"] = chains;
  r["draws_per_chain"] = run.num_retained();
  r["wall_seconds"] = secs;
  Json lj = Json::array();
  for (const auto& c : results) lj.push_back(c.log_joint.back());
  r["final_log_joint"] = lj;
  return r;
}

// ---- ddp -----------------------------------------------------------------

ddp::DdpConfig ddp_config(const Json& o) {
  ddp::DdpConfig c;
  if (o.contains("config")) io::from_json(o.at("config"), c);
  c.validate();
  return c;
}

struct DdpArchiveData {
  io::ProteinTable table;
  ddp::DdpData data;
};

DdpArchiveData load_archive_data(const fs::path& root, const Json& manifest) {
  DdpArchiveData d;
  d.table = io::load_protein_csv(root / io::kDataFile);
  const SplineBasis basis = io::basis_from_json(manifest.at("basis"));
  d.data = io::make_ddp_data(d.table, basis,
                             io::parse_time_scale(manifest.at("time_scale").get<std::string>()));
  return d;
}

Json write_ddp_archive(const fs::path& out, const Json& o, const io::ProteinTable& table,
                       const SplineBasis& basis, io::TimeScale scale,
                       const ddp::DdpConfig& cfg,
                       const RunSettings& run, std::uint64_t seed, std::size_t chains,
                       const std::optional<std::vector<int>>& frozen) {
  const auto start = std::chrono::steady_clock::now();
  const ddp::DdpData data = io::make_ddp_data(table, basis, scale);
  std::vector<ddp::DdpChain> results(chains);
  for_each_chain(chains, [&](std::size_t c) {
    Rng rng(seed, c);
    results[c] = ddp::run_chain(data, cfg, run, rng, frozen);
  });
  fs::create_directories(out);
  io::write_protein_csv(out / io::kDataFile, table);
  for (std::size_t c = 0; c < chains; ++c) {
    io::write_ddp_chain(io::chain_dir(out, c), results[c]);
  }
  Json m = base_manifest("ddp", seed, chains, run);
  m["config"] = io::to_json(cfg);
  m["data"] = io::kDataFile;
  m["source"] = o.contains("source") ? o.at("source")
                                     : Json{{"data", get_or<std::string>(o, "data", "")}};
  m["time_scale"] = io::to_string(scale);
  m["basis"] = io::to_json(basis);
  m["t_min"] = basis.t_min();
  m["t_max"] = basis.t_max();
  m["dims"] = {{"I", table.y.rows()}, {"J", table.y.cols()}, {"T", table.T()}};
  m["has_gamma"] = data.corners.has_value();
  if (data.corners) {
    const auto& c = *data.corners;
    m["corners"] = {{"control_first", table.subject_ids[c.j01]},
                    {"control_last", table.subject_ids[c.j0T]},
                    {"patient_first", table.subject_ids[c.j11]},
                    {"patient_last", table.subject_ids[c.j1T]}};
  }
  m["draws_per_chain"] = run.num_retained();
  m["frozen_labels"] = frozen ? Json(*frozen) : Json(nullptr);
  m["warnings"] = table.warnings;
  io::write_text(out / io::kManifestFile, m.dump(2) + "\n");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_timing(out, secs);

  Json r;
  r["archive"] = out.string();
  r["model"] = "ddp";
  r["chains"] = chains;
  r["draws_per_chain"] = run.num_retained();
  r["dims"] = m["dims"];
  r["has_gamma"] = data.corners.has_value();
  r["wall_seconds"] = secs;
  r["warnings"] = table.warnings;
  Json lj = Json::array();
  for (const auto& c : results) lj.push_back(c.log_joint.back());
  r["final_log_joint"] = lj;
  return r;
}

std::vector<ddp::DdpDraw> pooled_ddp_draws(const io::DdpArchive& a) {
  std::vector<ddp::DdpDraw> out;
  for (const auto& c : a.chains) out.insert(out.end(), c.draws.begin(), c.draws.end());
  return out;
}

std::vector<Partition> ddp_partitions(const std::vector<ddp::DdpDraw>& draws) {
  std::vector<Partition> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(Partition::from_labels(d.s));
  return out;
}

std::string labels_csv(const std::vector<std::string>& ids, const Partition& p,
                       const char* id_col) {
  std::string out = std::string(id_col) + ",cluster\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += ids[i] + "," + std::to_string(p[i]) + "\n";
  }
  return out;
}

Json summarize_nested(const Json& o, const fs::path& root, const fs::path& out) {
  const auto archive = io::read_nested_archive(root, chain_option(o));
  const Json& m = archive.manifest;
  const auto table = io::load_matrix_csv(root / io::kDataFile);
  const auto parts = pooled_partitions(archive.chains);
  const auto point = summary::dahl_point_estimate(parts);
  const int k_star = summary::map_cluster_count(parts);
  fs::create_directories(out);
  io::write_text(out / "subject_point.csv", labels_csv(table.col_ids, point.partition, "subject_id"));
  io::write_text(out / "coclustering_subjects.csv",
                 matrix_csv(coclustering_matrix(parts), table.col_ids));

  // Row co-clustering conditional on the subject point estimate.
  std::vector<nested::NestedDraw> cond_draws;
  const bool filter = get_or(o, "filter", false);
  if (filter) {
    for (const auto& c : archive.chains) {
      cond_draws.insert(cond_draws.end(), c.draws.begin(), c.draws.end());
    }
  } else {
    nested::NestedModelConfig cfg;
    io::from_json(m.at("config"), cfg);
    RunSettings run;
    io::from_json(m.at("run"), run);
    if (o.contains("conditional_iters")) {
      run.iters = o.at("conditional_iters").get<std::size_t>();
      run.burnin = std::min(run.burnin, run.iters / 2);
    }
    Json co = m;
    co["data"] = (root / io::kDataFile).string();
    write_nested_archive(out / "conditional", co, table, cfg, run, m.at("seed").get<std::uint64_t>(),
                         1, point.partition.labels(), kConditionalStream);
    const auto cond = io::read_nested_archive(out / "conditional");
    cond_draws = cond.chains.front().draws;
  }
  const auto cc = summary::nested_coclustering(cond_draws, point.partition);

  // Row point estimate inside every subject cluster.
  std::vector<std::size_t> rep(static_cast<std::size_t>(point.partition.num_clusters()));
  for (std::size_t j = point.partition.size(); j-- > 0;) {
    rep[static_cast<std::size_t>(point.partition[j])] = j;
  }
  std::string rows = "row_id";
  std::vector<Partition> row_points;
  Json clusters = Json::array();
  for (std::size_t c = 0; c < cc.size(); ++c) {
    io::write_text(out / ("coclustering_rows_" + std::to_string(c) + ".csv"),
                   matrix_csv(cc[c], table.row_ids));
    std::vector<Partition> rp;
    for (const auto& d : cond_draws) {
      if (Partition::from_labels(d.S) != point.partition) continue;
      const int k = d.S[rep[c]];
      std::vector<int> lab(static_cast<std::size_t>(d.M.cols()));
      for (Eigen::Index i = 0; i < d.M.cols(); ++i) lab[static_cast<std::size_t>(i)] = d.M(k, i);
      rp.push_back(Partition::from_labels(lab));
    }
    const auto est = summary::dahl_point_estimate(rp);
    row_points.push_back(est.partition);
    rows += ",cluster_" + std::to_string(c);
    Json cj = point_json(est);
    cj["subject_cluster"] = c;
    cj["map_row_clusters"] = summary::map_cluster_count(rp);
    clusters.push_back(cj);
  }
  rows += "\n";
  for (std::size_t i = 0; i < table.row_ids.size(); ++i) {
    rows += table.row_ids[i];
    for (const auto& p : row_points) rows += "," + std::to_string(p[i]);
    rows += "\n";
  }
  io::write_text(out / "row_point.csv", rows);

  Json r;
  r["model"] = "nested";
  r["archive"] = root.string();
  r["draws"] = parts.size();
  r["K_star"] = k_star;
  r["subject_point"] = point_json(point);
  r["conditioning"] = filter ? "filter" : "rerun";
  r["conditional_draws"] = cond_draws.size();
  r["row_clusters"] = clusters;
  io::write_text(out / "summary.json", r.dump(2) + "\n");
  return r;
}

Json summarize_ddp(const Json& o, const fs::path& root, const fs::path& out) {
  const auto archive = io::read_ddp_archive(root, chain_option(o));
  const auto& m = archive.manifest;
  const auto ad = load_archive_data(root, m);
  const auto draws = pooled_ddp_draws(archive);
  const auto parts = ddp_partitions(draws);
  const auto point = summary::dahl_point_estimate(parts);
  const int k_star = summary::map_cluster_count(parts);
  fs::create_directories(out);
  io::write_text(out / "protein_point.csv",
                 labels_csv(ad.table.protein_ids, point.partition, "protein_id"));
  const auto I = ad.table.protein_ids.size();
  if (I <= 2000) {
    io::write_text(out / "coclustering_proteins.csv",
                   matrix_csv(coclustering_matrix(parts), ad.table.protein_ids));
  }
  Json r;
  r["model"] = "ddp";
  r["archive"] = root.string();
  r["draws"] = draws.size();
  r["K_star"] = k_star;
  r["point"] = point_json(point);
  if (m.at("has_gamma").get<bool>()) {
    ddp::DdpConfig cfg;
    io::from_json(m.at("config"), cfg);
    const Eigen::VectorXd rb = summary::rao_blackwell_gamma(draws, ad.data, cfg);
    const Eigen::VectorXd mc = summary::mean_gamma(draws);
    const Eigen::VectorXd naive = summary::naive_gamma_hat(ad.data);
    std::string g = "protein_id,gamma_rb,gamma_mc,gamma_naive\n";
    for (std::size_t i = 0; i < I; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      g += ad.table.protein_ids[i] + "," + io::format_double(rb(ii)) + "," +
           io::format_double(mc(ii)) + "," + io::format_double(naive(ii)) + "\n";
    }
    io::write_text(out / "gamma.csv", g);
    r["gamma"] = "gamma.csv";
  } else {
    r["gamma"] = nullptr;
    r["warnings"] = m.at("warnings");
  }
  io::write_text(out / "summary.json", r.dump(2) + "\n");
  return r;
}

void push_report(Json& result, const exch::ExchReport& rep) {
  result["reports"].push_back(Json::parse(rep.to_json()));
  if (!rep.pass) result["pass"] = false;
}

}  // namespace

Json simulate(const Json& o) {
  const std::string model = require_string(o, "model");
  const fs::path out = require_string(o, "out");
  const auto seed = get_or<std::uint64_t>(o, "seed", 1);
  Rng rng(seed, 0);
  Json truth;
  truth["model"] = model;
  truth["seed"] = seed;
  Json r;
  r["model"] = model;
  r["out"] = out.string();
  if (model == "protein") {
    sim::ProteinSimTruth t;
    t.I = get_or<std::size_t>(o, "I", t.I);
    t.J = get_or<std::size_t>(o, "J", t.J);
    t.paired_times = get_or<std::size_t>(o, "paired_times", 0);
    t.delta_sd = get_or(o, "delta_sd", t.delta_sd);
    t.noise_sd = get_or(o, "noise_sd", t.noise_sd);
    t.patient_effect = get_or(o, "patient_effect", t.patient_effect);
    if (o.contains("delta")) t.delta_override = o.at("delta").get<std::vector<double>>();
    const auto s = sim::simulate_protein(t, rng);
    io::ProteinTable table;
    for (std::size_t i = 0; i < t.I; ++i) table.protein_ids.push_back(pad_id("P", i, t.I));
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      table.subject_ids.push_back(pad_id("S", j, s.t.size()));
    }
    table.y = s.y;
    table.z = s.z;
    table.t = s.t;
    io::write_protein_csv(out / "data.csv", table);
    truth["s"] = s.s;
    truth["alpha"] = s.alpha;
    truth["delta"] = s.delta;
    truth["t"] = s.t;
    truth["z"] = s.z;
    truth["patient_effect"] = t.patient_effect;
    r["dims"] = {{"I", t.I}, {"J", s.t.size()}};
  } else if (model == "nested") {
    nested::NestedModelConfig cfg;
    if (o.contains("config")) io::from_json(o.at("config"), cfg);
    const auto I = get_or<std::size_t>(o, "I", 50);
    const auto J = get_or<std::size_t>(o, "J", 20);
    std::optional<double> sep;
    if (o.contains("separation") && !o.at("separation").is_null()) {
      sep = o.at("separation").get<double>();
    }
    const auto s = sim::simulate_nested(cfg, I, J, rng, sep);
    io::MatrixTable table;
    for (std::size_t i = 0; i < I; ++i) table.row_ids.push_back(pad_id("R", i, I));
    for (std::size_t j = 0; j < J; ++j) table.col_ids.push_back(pad_id("S", j, J));
    table.y = s.y;
    io::write_matrix_csv(out / "data.csv", table);
    truth["config"] = io::to_json(cfg);
    truth["separation"] = sep ? Json(*sep) : Json(nullptr);
    truth["S"] = s.S;
    Json cells = Json::array();
    for (Eigen::Index i = 0; i < s.M.rows(); ++i) {
      std::vector<int> row(static_cast<std::size_t>(s.M.cols()));
      for (Eigen::Index j = 0; j < s.M.cols(); ++j) row[static_cast<std::size_t>(j)] = s.M(i, j);
      cells.push_back(row);
    }
    truth["M"] = cells;
    truth["mu"] = std::vector<double>(s.state.mu.data(), s.state.mu.data() + s.state.mu.size());
    truth["sigma2"] =
        std::vector<double>(s.state.sigma2.data(), s.state.sigma2.data() + s.state.sigma2.size());
    r["dims"] = {{"I", I}, {"J", J}};
  } else {
    throw ParameterError("unknown simulation model '" + model + "' (expected protein or nested)");
  }
  io::write_text(out / "truth.json", truth.dump(2) + "\n");
  r["data"] = (out / "data.csv").string();
  r["truth"] = (out / "truth.json").string();
  return r;
}

Json fit(const Json& o) {
  const std::string model = require_string(o, "model");
  const fs::path out = require_string(o, "out");
  const auto seed = get_or<std::uint64_t>(o, "seed", 1);
  const auto chains = get_or<std::size_t>(o, "chains", 1);
  if (chains < 1) throw ParameterError("chains must be >= 1");
  RunSettings run;
  if (o.contains("run")) io::from_json(o.at("run"), run);
  run.validate();
  std::optional<std::vector<int>> frozen;
  if (o.contains("frozen_labels") && !o.at("frozen_labels").is_null()) {
    frozen = o.at("frozen_labels").get<std::vector<int>>();
  }
  if (model == "nested") {
    const auto d = load_nested_data(o);
    const auto cfg = nested_config(o, d.table.y);
    return write_nested_archive(out, o, d.table, cfg, run, seed, chains, frozen,
                                get_or<std::uint64_t>(o, "stream_offset", 0));
  }
  if (model == "ddp") {
    const auto table = io::load_protein_csv(resolve(o, require_string(o, "data")));
    io::TimeDomain dom;
    dom.scale = io::parse_time_scale(get_or<std::string>(o, "time_scale", "index"));
    if (o.contains("t_min") && !o.at("t_min").is_null()) dom.t_min = o.at("t_min").get<double>();
    if (o.contains("t_max") && !o.at("t_max").is_null()) dom.t_max = o.at("t_max").get<double>();
    const SplineBasis basis = o.contains("basis") ? io::basis_from_json(o.at("basis"))
                                                  : io::make_basis(table, dom);
    return write_ddp_archive(out, o, table, basis, dom.scale, ddp_config(o), run, seed,
                             chains, frozen);
  }
  throw ParameterError("unknown model '" + model + "' (expected nested or ddp)");
}

Json summarize(const Json& o) {
  const fs::path root = require_string(o, "archive");
  const fs::path out = require_string(o, "out");
  const Json m = io::read_manifest(root);
  if (m.at("model") == "nested") return summarize_nested(o, root, out);
  return summarize_ddp(o, root, out);
}

Json rank(const Json& o) {
  const fs::path root = require_string(o, "archive");
  const fs::path out = require_string(o, "out");
  const double c = get_or(o, "c", 0.975);
  std::optional<std::size_t> top;
  if (o.contains("top") && !o.at("top").is_null()) top = o.at("top").get<std::size_t>();
  const auto archive = io::read_ddp_archive(root, chain_option(o));
  if (!archive.manifest.at("has_gamma").get<bool>()) {
    throw ValidationError("archive has no gamma draws (corner subjects missing)");
  }
  const auto table = io::load_protein_csv(root / io::kDataFile);
  const auto draws = pooled_ddp_draws(archive);
  const auto rep = summary::rank_quantile(summary::gamma_draw_matrix(draws), c, top);
  std::vector<bool> chosen(table.protein_ids.size(), false);
  for (std::size_t i : rep.selected) chosen[i] = true;
  std::string csv = "protein_id,exceed_prob,r_star,selected\n";
  for (std::size_t i = 0; i < table.protein_ids.size(); ++i) {
    csv += table.protein_ids[i] + "," +
           io::format_double(rep.exceed_prob(static_cast<Eigen::Index>(i))) + "," +
           std::to_string(rep.r_star[i]) + "," + (chosen[i] ? "1" : "0") + "\n";
  }
  std::string sel = "position,protein_id,exceed_prob,r_star\n";
  Json ids = Json::array();
  for (std::size_t k = 0; k < rep.selected.size(); ++k) {
    const std::size_t i = rep.selected[k];
    sel += std::to_string(k + 1) + "," + table.protein_ids[i] + "," +
           io::format_double(rep.exceed_prob(static_cast<Eigen::Index>(i))) + "," +
           std::to_string(rep.r_star[i]) + "\n";
    ids.push_back(table.protein_ids[i]);
  }
  fs::create_directories(out);
  io::write_text(out / "rank.csv", csv);
  io::write_text(out / "selected.csv", sel);
  Json r;
  r["archive"] = root.string();
  r["c"] = c;
  r["I"] = table.protein_ids.size();
  r["draws"] = draws.size();
  r["top_set_size"] = rep.selected.size();
  r["top_override"] = top ? Json(*top) : Json(nullptr);
  r["selected"] = ids;
  io::write_text(out / "rank.json", r.dump(2) + "\n");
  return r;
}

Json check_exch(const Json& o) {
  const std::string model = get_or<std::string>(o, "model", "all");
  const auto draws = get_or<std::size_t>(o, "draws", 100000);
  const auto seed = get_or<std::uint64_t>(o, "seed", 1);
  if (model != "nested" && model != "ddp" && model != "reference" && model != "all") {
    throw ParameterError("unknown check-exch model '" + model +
                         "' (expected nested, ddp, reference or all)");
  }
  // The correlation checks need finite fourth moments of the atoms, so the
  // nested prior uses a0 = 6 there.
  nested::NestedModelConfig ncfg;
  ncfg.atom_prior.a0 = 6.0;
  ncfg.atom_prior.b0 = 5.0;
  if (o.contains("nested")) io::from_json(o.at("nested"), ncfg);
  ddp::DdpConfig dcfg;
  if (o.contains("ddp")) io::from_json(o.at("ddp"), dcfg);

  Json r;
  r["pass"] = true;
  r["draws"] = draws;
  r["seed"] = seed;
  r["reports"] = Json::array();
  std::uint64_t stream = 0;
  auto next = [&] { return Rng(seed, stream++); };
  const bool all = model == "all";
  if (all || model == "reference") {
    auto g = next();
    push_report(r, exch::check_partial_corr(exch::iid_normal_sampler(2, 2), draws, g,
                                            "iid_normal", exch::Rule::equal));
    g = next();
    push_report(r, exch::check_partial_corr(exch::column_effect_sampler(2, 2), draws, g,
                                            "column_effect", exch::Rule::greater));
    g = next();
    push_report(r, exch::check_separate_corr(exch::iid_normal_sampler(2, 2), draws, g,
                                             "iid_normal", exch::Rule::equal));
    g = next();
    push_report(r, exch::check_separate_corr(exch::additive_sampler(2, 2), draws, g,
                                             "additive", exch::Rule::greater));
  }
  if (all || model == "nested") {
    auto g = next();
    push_report(r, exch::check_partial_corr(exch::nested_prior_sampler(ncfg, 2, 2), draws, g,
                                            "nested_prior", exch::Rule::at_least));
    g = next();
    push_report(r, exch::check_coclustering_borrowing(exch::nested_label_sampler(ncfg, 3, 2),
                                                      draws, g, "nested_prior",
                                                      exch::Rule::greater));
    g = next();
    push_report(r, exch::check_coclustering_borrowing(exch::control_label_sampler(ncfg, 3, 2),
                                                      draws, g, "independent_columns_control",
                                                      exch::Rule::equal));
  }
  if (all || model == "ddp") {
    auto g = next();
    push_report(r, exch::check_separate_corr(exch::ddp_theta_sampler(dcfg, 2, 2), draws, g,
                                             "ddp_prior_theta", exch::Rule::at_least));
  }
  if (o.contains("out") && !o.at("out").is_null()) {
    const fs::path out = o.at("out").get<std::string>();
    fs::create_directories(out);
    io::write_text(out / "exch_report.json", r.dump(2) + "\n");
  }
  return r;
}

Json diagnose(const Json& o) {
  const fs::path root = require_string(o, "archive");
  const fs::path out = require_string(o, "out");
  const auto archive = io::read_ddp_archive(root, chain_option(o));
  const auto& m = archive.manifest;
  const auto ad = load_archive_data(root, m);
  const auto draws = pooled_ddp_draws(archive);
  const auto point = summary::dahl_point_estimate(ddp_partitions(draws));
  Rng rng(get_or<std::uint64_t>(o, "seed", m.at("seed").get<std::uint64_t>()), kDiagnoseStream);
  const auto diag = summary::fit_diagnostics(draws, ad.data, point.partition, rng);

  fs::create_directories(out);
  std::string res = "draw,residual,standardized\n";
  for (std::size_t k = 0; k < diag.residuals.size(); ++k) {
    res += std::to_string(k) + "," + io::format_double(diag.residuals[k]) + "," +
           io::format_double(diag.standardized[k]) + "\n";
  }
  io::write_text(out / "residuals.csv", res);
  std::string qq = "theoretical,sample\n";
  for (const auto& [a, b] : summary::normal_qq(diag.standardized)) {
    qq += io::format_double(a) + "," + io::format_double(b) + "\n";
  }
  io::write_text(out / "qq.csv", qq);
  std::string r2 = "cluster,size,r2\n";
  for (std::size_t h = 0; h < diag.r2_per_cluster.size(); ++h) {
    r2 += std::to_string(h) + "," + std::to_string(diag.cluster_sizes[h]) + "," +
          io::format_double(diag.r2_per_cluster[h]) + "\n";
  }
  io::write_text(out / "r2.csv", r2);
  Json r;
  r["archive"] = root.string();
  r["draws"] = draws.size();
  r["clusters"] = point.partition.num_clusters();
  r["r2"] = diag.r2_per_cluster;
  r["mean_r2"] = diag.mean_r2();
  r["ks_statistic"] = diag.ks_statistic;
  r["ks_pvalue"] = diag.ks_pvalue;
  r["ks_pass_at_0.01"] = diag.ks_pvalue >= 0.01;
  io::write_text(out / "diagnostics.json", r.dump(2) + "\n");
  return r;
}

}  // namespace sepex::jobs
