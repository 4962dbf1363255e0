// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "sepex/chain.hpp"
#include "sepex/ddp.hpp"
#include "sepex/nested.hpp"
#include "sepex/spline.hpp"

namespace sepex::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Shortest round-trip text is not required; 17 significant digits always
/// reproduce the double exactly.
std::string format_double(double x);
double parse_double(std::string_view s, std::string_view what);
long parse_long(std::string_view s, std::string_view what);

/// Comma-separated table with a header row. Fields are trimmed; double
/// quotes around a field are stripped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if missing
};
CsvTable read_csv(const fs::path& path);

std::string read_text(const fs::path& path);
/// Writes via a temporary file and rename so partial files never appear.
void write_text(const fs::path& path, std::string_view text);

// ---- microbiome-style matrices ---------------------------------------

enum class Normalization { rel_freq, avg_library, none };
Normalization parse_normalization(std::string_view s);
std::string to_string(Normalization n);

/// Header: row id column followed by one column per subject; one row per
/// OTU holding nonnegative integer counts.
struct OtuTable {
  std::vector<std::string> row_ids;
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd counts;          // I x J
  Eigen::VectorXd library_sizes;   // J
  Eigen::MatrixXd y;               // normalized (and possibly logged)
  Normalization normalization = Normalization::none;
  bool log_transform = false;
  double pseudo_count = 0.0;       // added before the log
};

/// rel_freq: z / gamma_j; avg_library: (z / gamma_j) * mean(gamma);
/// none: raw counts. The log transform adds half the smallest positive
/// normalized value before taking logs so zero counts stay finite.
OtuTable load_otu_csv(const fs::path& path, Normalization normalization,
                      bool log_transform);
OtuTable normalize_counts(Eigen::MatrixXd counts, std::vector<std::string> row_ids,
                          std::vector<std::string> subject_ids,
                          Normalization normalization, bool log_transform);

/// Same layout with arbitrary real values, used as-is.
struct MatrixTable {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd y;
};
MatrixTable load_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const MatrixTable& table);

// ---- long-format protein data ----------------------------------------

/// Columns protein_id, subject_id, y, z, t (any order, extra columns
/// ignored). Proteins and subjects keep their order of first appearance.
struct ProteinTable {
  std::vector<std::string> protein_ids;
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd y;            // I x J
  std::vector<int> z;           // J
  std::vector<double> t;        // J
  std::vector<double> unique_times;
  std::optional<ddp::CornerSubjects> corners;
  std::vector<std::string> warnings;

  int T() const { return static_cast<int>(unique_times.size()); }
};
ProteinTable load_protein_csv(const fs::path& path);
void write_protein_csv(const fs::path& path, const ProteinTable& table);
/// Fills unique times and corners from z and t.
void index_times(ProteinTable& table);

/// Time axis fed to the spline: `index` maps the k-th smallest unique time
/// to k (1..T), `raw` uses the recorded t.
enum class TimeScale { index, raw };
std::string to_string(TimeScale s);
TimeScale parse_time_scale(std::string_view s);

/// Spline domain: explicit bounds, or the observed range on the chosen scale.
struct TimeDomain {
  TimeScale scale = TimeScale::index;
  std::optional<double> t_min;
  std::optional<double> t_max;
};
/// Per-subject basis arguments on `scale`.
std::vector<double> basis_ages(const ProteinTable& table, TimeScale scale);
SplineBasis make_basis(const ProteinTable& table, const TimeDomain& domain);
ddp::DdpData make_ddp_data(const ProteinTable& table, const SplineBasis& basis,
                           TimeScale scale);

// ---- configuration ---------------------------------------------------

Json to_json(const nested::NestedModelConfig& c);
Json to_json(const ddp::DdpConfig& c);
Json to_json(const RunSettings& r);
Json to_json(const SplineBasis& b);
/// Keys missing from `j` keep the values already in the target.
void from_json(const Json& j, nested::NestedModelConfig& c);
void from_json(const Json& j, ddp::DdpConfig& c);
void from_json(const Json& j, RunSettings& r);
SplineBasis basis_from_json(const Json& j);
Json read_json(const fs::path& path);

// ---- chain archives --------------------------------------------------

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kDataFile = "data.csv";
inline constexpr int kFormatVersion = 1;

/// Manifest plus the per-chain draws; one element per chain.
struct NestedArchive {
  Json manifest;
  std::vector<nested::NestedChain> chains;
};
struct DdpArchive {
  Json manifest;
  std::vector<ddp::DdpChain> chains;
};

fs::path chain_dir(const fs::path& root, std::size_t chain);

/// Writes one chain's draws and log-joint trace into `dir`.
void write_nested_chain(const fs::path& dir, const nested::NestedChain& chain);
void write_ddp_chain(const fs::path& dir, const ddp::DdpChain& chain);
nested::NestedChain read_nested_chain(const fs::path& dir, int K, int L,
                                      Eigen::Index I, Eigen::Index J);
ddp::DdpChain read_ddp_chain(const fs::path& dir, int H, Eigen::Index I, int T,
                             bool with_gamma);

/// Reads the manifest and every chain (or only `only_chain`), checking that
/// the draw counts match the manifest.
NestedArchive read_nested_archive(const fs::path& root,
                                  std::optional<std::size_t> only_chain = std::nullopt);
DdpArchive read_ddp_archive(const fs::path& root,
                            std::optional<std::size_t> only_chain = std::nullopt);
Json read_manifest(const fs::path& root);

}  // namespace sepex::io
