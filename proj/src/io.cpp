// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "sepex/error.hpp"

namespace sepex::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void append_int(std::string& out, long v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void append_double(std::string& out, double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, r.ptr);
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Numeric table of the chain files: header plus rows of numbers, with the
// expected width checked on every row.
struct NumTable {
  std::vector<std::vector<double>> rows;
};

NumTable read_num_table(const fs::path& path, std::size_t width) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != width) {
    throw IoError(path.string() + ": expected " + std::to_string(width) +
                  " columns, found " + std::to_string(t.header.size()));
  }
  NumTable out;
  out.rows.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != width) {
      throw IoError(where(path, r + 2) + ": ragged row");
    }
    std::vector<double> v(width);
    for (std::size_t c = 0; c < width; ++c) v[c] = parse_double(row[c], where(path, r + 2));
    out.rows.push_back(std::move(v));
  }
  return out;
}

std::string header_line(std::string_view lead, std::string_view stem,
                        Eigen::Index n) {
  std::string h(lead);
  for (Eigen::Index k = 0; k < n; ++k) {
    h += ',';
    h += stem;
    h += std::to_string(k + 1);
  }
  return h + "\n";
}

template <typename Vec>
void append_row(std::string& out, std::size_t iter, const Vec& v) {
  append_int(out, static_cast<long>(iter));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out += ',';
    if constexpr (std::is_integral_v<std::decay_t<decltype(v(0))>>) {
      append_int(out, v(k));
    } else {
      append_double(out, v(k));
    }
  }
  out += '\n';
}

void append_labels(std::string& out, std::size_t iter, const std::vector<int>& v) {
  append_int(out, static_cast<long>(iter));
  for (int x : v) {
    out += ',';
    append_int(out, x);
  }
  out += '\n';
}

std::string log_joint_text(const std::vector<double>& lj) {
  std::string out = "iter,log_joint\n";
  for (std::size_t t = 0; t < lj.size(); ++t) {
    append_int(out, static_cast<long>(t + 1));
    out += ',';
    append_double(out, lj[t]);
    out += '\n';
  }
  return out;
}

std::vector<double> read_log_joint(const fs::path& path) {
  const auto t = read_num_table(path, 2);
  std::vector<double> out;
  for (const auto& r : t.rows) out.push_back(r[1]);
  return out;
}

int to_label(double x, const fs::path& path) {
  if (x != std::floor(x)) throw IoError(path.string() + ": non-integer label");
  return static_cast<int>(x);
}

void check_rows(const NumTable& t, std::size_t expected, const fs::path& path) {
  if (t.rows.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) +
                  " rows, found " + std::to_string(t.rows.size()));
  }
}

template <typename T>
void get_if(const Json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

std::string format_double(double x) {
  std::string s;
  append_double(s, x);
  return s;
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(std::string(what) + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

long parse_long(std::string_view s, std::string_view what) {
  s = trim(s);
  long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(std::string(what) + ": not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ValidationError("missing column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

CsvTable read_csv(const fs::path& path) {
  const std::string text = read_text(path);
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (first) {
      t.header = split_line(line);
      first = false;
    } else {
      t.rows.push_back(split_line(line));
    }
  }
  if (first) throw IoError(path.string() + ": empty file");
  return t;
}

Normalization parse_normalization(std::string_view s) {
  if (s == "rel_freq") return Normalization::rel_freq;
  if (s == "avg_library") return Normalization::avg_library;
  if (s == "none") return Normalization::none;
  throw ParameterError("unknown normalization '" + std::string(s) +
                       "' (expected rel_freq, avg_library or none)");
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::rel_freq: return "rel_freq";
    case Normalization::avg_library: return "avg_library";
    case Normalization::none: return "none";
  }
  return "none";
}

OtuTable normalize_counts(Eigen::MatrixXd counts, std::vector<std::string> row_ids,
                          std::vector<std::string> subject_ids,
                          Normalization normalization, bool log_transform) {
  OtuTable t;
  t.row_ids = std::move(row_ids);
  t.subject_ids = std::move(subject_ids);
  t.counts = std::move(counts);
  t.normalization = normalization;
  t.log_transform = log_transform;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double v = t.counts(i, j);
      if (!(v >= 0.0) || v != std::floor(v)) {
        throw ValidationError("count at (" + t.row_ids[static_cast<std::size_t>(i)] + ", " +
                              t.subject_ids[static_cast<std::size_t>(j)] +
                              ") must be a nonnegative integer");
      }
    }
  }
  t.library_sizes = t.counts.colwise().sum().transpose();
  if (normalization != Normalization::none) {
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      if (t.library_sizes(j) <= 0.0) {
        throw ValidationError("subject '" + t.subject_ids[static_cast<std::size_t>(j)] +
                              "' has zero library size");
      }
    }
  }
  t.y = t.counts;
  if (normalization != Normalization::none) {
    for (Eigen::Index j = 0; j < t.y.cols(); ++j) t.y.col(j) /= t.library_sizes(j);
    if (normalization == Normalization::avg_library) t.y *= t.library_sizes.mean();
  }
  if (log_transform) {
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < t.y.size(); ++k) {
      if (t.y(k) > 0.0) smallest = std::min(smallest, t.y(k));
    }
    t.pseudo_count = std::isfinite(smallest) ? 0.5 * smallest : 1.0;
    t.y = (t.y.array() + t.pseudo_count).log().matrix();
  }
  return t;
}

OtuTable load_otu_csv(const fs::path& path, Normalization normalization,
                      bool log_transform) {
  const MatrixTable m = load_matrix_csv(path);
  return normalize_counts(m.y, m.row_ids, m.col_ids, normalization, log_transform);
}

MatrixTable load_matrix_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2) throw ValidationError(path.string() + ": need at least one data column");
  if (t.rows.empty()) throw ValidationError(path.string() + ": no data rows");
  MatrixTable m;
  m.col_ids.assign(t.header.begin() + 1, t.header.end());
  const auto J = static_cast<Eigen::Index>(m.col_ids.size());
  m.y.resize(static_cast<Eigen::Index>(t.rows.size()), J);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (static_cast<Eigen::Index>(row.size()) != J + 1) {
      throw ValidationError(where(path, r + 2) + ": ragged row (expected " +
                            std::to_string(J + 1) + " fields, found " +
                            std::to_string(row.size()) + ")");
    }
    m.row_ids.push_back(row[0]);
    for (Eigen::Index j = 0; j < J; ++j) {
      m.y(static_cast<Eigen::Index>(r), j) =
          parse_double(row[static_cast<std::size_t>(j + 1)],
                       where(path, r + 2) + " column '" + m.col_ids[static_cast<std::size_t>(j)] + "'");
    }
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const MatrixTable& table) {
  std::string out = "id";
  for (const auto& c : table.col_ids) out += "," + quote_if_needed(c);
  out += '\n';
  for (Eigen::Index i = 0; i < table.y.rows(); ++i) {
    out += quote_if_needed(table.row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < table.y.cols(); ++j) {
      out += ',';
      append_double(out, table.y(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

void index_times(ProteinTable& table) {
  table.unique_times = table.t;
  std::sort(table.unique_times.begin(), table.unique_times.end());
  table.unique_times.erase(std::unique(table.unique_times.begin(), table.unique_times.end()),
                           table.unique_times.end());
  std::vector<int> idx;
  for (double t : table.t) {
    idx.push_back(static_cast<int>(
        std::lower_bound(table.unique_times.begin(), table.unique_times.end(), t) -
        table.unique_times.begin()));
  }
  table.corners = ddp::find_corners(idx, table.z, table.T());
  if (!table.corners) {
    table.warnings.push_back(
        "no control and patient subjects at both the first and the last time; "
        "gamma and ranking are disabled");
  }
}

ProteinTable load_protein_csv(const fs::path& path) {
  const CsvTable csv = read_csv(path);
  const std::size_t cp = csv.column("protein_id");
  const std::size_t cs = csv.column("subject_id");
  const std::size_t cy = csv.column("y");
  const std::size_t cz = csv.column("z");
  const std::size_t ct = csv.column("t");
  ProteinTable t;
  std::map<std::string, std::size_t> pidx, sidx;
  struct Cell {
    std::size_t p, s;
    double y;
  };
  std::vector<Cell> cells;
  cells.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string loc = where(path, r + 2);
    if (row.size() != csv.header.size()) throw ValidationError(loc + ": ragged row");
    const auto [pit, pnew] = pidx.emplace(row[cp], t.protein_ids.size());
    if (pnew) t.protein_ids.push_back(row[cp]);
    const long z = parse_long(row[cz], loc + " column 'z'");
    if (z != 0 && z != 1) {
      throw ValidationError(loc + ": z must be 0 or 1, found " + std::to_string(z));
    }
    const double time = parse_double(row[ct], loc + " column 't'");
    if (!std::isfinite(time)) throw ValidationError(loc + ": t must be finite");
    const auto [sit, snew] = sidx.emplace(row[cs], t.subject_ids.size());
    if (snew) {
      t.subject_ids.push_back(row[cs]);
      t.z.push_back(static_cast<int>(z));
      t.t.push_back(time);
    } else if (t.z[sit->second] != z || t.t[sit->second] != time) {
      throw ValidationError(loc + ": subject '" + row[cs] +
                            "' has inconsistent z or t across rows");
    }
    const double y = parse_double(row[cy], loc + " column 'y'");
    if (!std::isfinite(y)) throw ValidationError(loc + ": y must be finite");
    cells.push_back({pit->second, sit->second, y});
  }
  if (cells.empty()) throw ValidationError(path.string() + ": no data rows");
  const auto I = static_cast<Eigen::Index>(t.protein_ids.size());
  const auto J = static_cast<Eigen::Index>(t.subject_ids.size());
  t.y = Eigen::MatrixXd::Constant(I, J, std::numeric_limits<double>::quiet_NaN());
  for (const auto& c : cells) {
    double& v = t.y(static_cast<Eigen::Index>(c.p), static_cast<Eigen::Index>(c.s));
    if (!std::isnan(v)) {
      throw ValidationError("duplicate row for (protein '" + t.protein_ids[c.p] +
                            "', subject '" + t.subject_ids[c.s] + "')");
    }
    v = c.y;
  }
  std::string missing;
  std::size_t n_missing = 0;
  for (Eigen::Index i = 0; i < I; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) {
      if (!std::isnan(t.y(i, j))) continue;
      if (++n_missing <= 20) {
        missing += " (" + t.protein_ids[static_cast<std::size_t>(i)] + ", " +
                   t.subject_ids[static_cast<std::size_t>(j)] + ")";
      }
    }
  }
  if (n_missing > 0) {
    throw ValidationError(std::to_string(n_missing) + " missing (protein, subject) cells:" +
                          missing + (n_missing > 20 ? " ..." : ""));
  }
  index_times(t);
  return t;
}

void write_protein_csv(const fs::path& path, const ProteinTable& table) {
  std::string out = "protein_id,subject_id,y,z,t\n";
  out.reserve(static_cast<std::size_t>(table.y.size()) * 40);
  for (Eigen::Index i = 0; i < table.y.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.y.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      out += quote_if_needed(table.protein_ids[static_cast<std::size_t>(i)]);
      out += ',';
      out += quote_if_needed(table.subject_ids[jj]);
      out += ',';
      append_double(out, table.y(i, j));
      out += ',';
      append_int(out, table.z[jj]);
      out += ',';
      append_double(out, table.t[jj]);
      out += '\n';
    }
  }
  write_text(path, out);
}

std::string to_string(TimeScale s) {
  return s == TimeScale::index ? "index" : "raw";
}

TimeScale parse_time_scale(std::string_view s) {
  if (s == "index") return TimeScale::index;
  if (s == "raw") return TimeScale::raw;
  throw ParameterError("unknown time scale '" + std::string(s) +
                       "' (expected index or raw)");
}

std::vector<double> basis_ages(const ProteinTable& table, TimeScale scale) {
  if (scale == TimeScale::raw) return table.t;
  std::vector<double> ages;
  ages.reserve(table.t.size());
  for (double t : table.t) {
    const auto k = std::lower_bound(table.unique_times.begin(),
                                    table.unique_times.end(), t) -
                   table.unique_times.begin();
    ages.push_back(static_cast<double>(k + 1));
  }
  return ages;
}

SplineBasis make_basis(const ProteinTable& table, const TimeDomain& domain) {
  const auto ages = basis_ages(table, domain.scale);
  const auto [lo, hi] = std::minmax_element(ages.begin(), ages.end());
  const double t_min = domain.t_min.value_or(*lo);
  const double t_max = domain.t_max.value_or(*hi);
  if (*lo < t_min || *hi > t_max) {
    throw ValidationError("observed times fall outside the spline domain [" +
                          format_double(t_min) + ", " + format_double(t_max) + "]");
  }
  return SplineBasis::with_quantile_knots(ages, t_min, t_max);
}

ddp::DdpData make_ddp_data(const ProteinTable& table, const SplineBasis& basis,
                           TimeScale scale) {
  return ddp::make_data(table.y, basis_ages(table, scale), table.z, basis);
}

Json to_json(const nested::NestedModelConfig& c) {
  return Json{{"K", c.K},
              {"L", c.L},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"m0", c.atom_prior.m0},
              {"kappa0", c.atom_prior.kappa0},
              {"a0", c.atom_prior.a0},
              {"b0", c.atom_prior.b0}};
}

Json to_json(const ddp::DdpConfig& c) {
  return Json{{"H", c.H},
              {"xi", c.xi},
              {"beta0", std::vector<double>(c.beta0.data(), c.beta0.data() + ddp::kCoef)},
              {"sigma_beta0", c.sigma_beta0},
              {"a0", c.a0},
              {"b0", c.b0},
              {"zeta", c.zeta},
              {"omega2", c.omega2},
              {"mu0", c.mu0},
              {"sigma02", c.sigma02}};
}

Json to_json(const RunSettings& r) {
  return Json{{"iters", r.iters}, {"burnin", r.burnin}, {"thin", r.thin}};
}

Json to_json(const SplineBasis& b) {
  return Json{{"t_min", b.t_min()},
              {"t_max", b.t_max()},
              {"interior", {b.interior_knots()[0], b.interior_knots()[1]}}};
}

void from_json(const Json& j, nested::NestedModelConfig& c) {
  get_if(j, "K", c.K);
  get_if(j, "L", c.L);
  get_if(j, "alpha", c.alpha);
  get_if(j, "beta", c.beta);
  get_if(j, "m0", c.atom_prior.m0);
  get_if(j, "kappa0", c.atom_prior.kappa0);
  get_if(j, "a0", c.atom_prior.a0);
  get_if(j, "b0", c.atom_prior.b0);
}

void from_json(const Json& j, ddp::DdpConfig& c) {
  get_if(j, "H", c.H);
  get_if(j, "xi", c.xi);
  if (j.contains("beta0")) {
    const auto& b = j.at("beta0");
    if (b.is_number()) {
      c.beta0.setConstant(b.get<double>());
    } else {
      const auto v = b.get<std::vector<double>>();
      if (v.size() != static_cast<std::size_t>(ddp::kCoef)) {
        throw ParameterError("beta0 must be a number or a list of 12 numbers");
      }
      for (int k = 0; k < ddp::kCoef; ++k) c.beta0(k) = v[static_cast<std::size_t>(k)];
    }
  }
  get_if(j, "sigma_beta0", c.sigma_beta0);
  get_if(j, "a0", c.a0);
  get_if(j, "b0", c.b0);
  get_if(j, "zeta", c.zeta);
  get_if(j, "omega2", c.omega2);
  get_if(j, "mu0", c.mu0);
  get_if(j, "sigma02", c.sigma02);
}

void from_json(const Json& j, RunSettings& r) {
  get_if(j, "iters", r.iters);
  get_if(j, "burnin", r.burnin);
  get_if(j, "thin", r.thin);
}

SplineBasis basis_from_json(const Json& j) {
  const auto in = j.at("interior").get<std::vector<double>>();
  if (in.size() != 2) throw ValidationError("basis needs two interior knots");
  return SplineBasis(j.at("t_min").get<double>(), j.at("t_max").get<double>(),
                     {in[0], in[1]});
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

fs::path chain_dir(const fs::path& root, std::size_t chain) {
  return root / ("chain_" + std::to_string(chain));
}

void write_nested_chain(const fs::path& dir, const nested::NestedChain& chain) {
  fs::create_directories(dir);
  if (chain.draws.empty()) {
    throw ValidationError("chain holds no retained draws");
  }
  const auto& d0 = chain.draws.front();
  const Eigen::Index K = d0.M.rows(), I = d0.M.cols(), L = d0.mu.size();
  std::string s = header_line("iter", "S_", static_cast<Eigen::Index>(d0.S.size()));
  std::string m = "iter,k" + header_line("", "M_", I);
  std::string pi = header_line("iter", "pi_", K);
  std::string w = "iter,k" + header_line("", "w_", L);
  std::string mu = header_line("iter", "mu_", L);
  std::string s2 = header_line("iter", "sigma2_", L);
  for (const auto& d : chain.draws) {
    append_labels(s, d.iteration, d.S);
    for (Eigen::Index k = 0; k < K; ++k) {
      append_int(m, static_cast<long>(d.iteration));
      m += ',';
      append_row(m, static_cast<std::size_t>(k), Eigen::VectorXi(d.M.row(k).transpose()));
      append_int(w, static_cast<long>(d.iteration));
      w += ',';
      append_row(w, static_cast<std::size_t>(k), Eigen::VectorXd(d.w.row(k).transpose()));
    }
    append_row(pi, d.iteration, d.pi);
    append_row(mu, d.iteration, d.mu);
    append_row(s2, d.iteration, d.sigma2);
  }
  write_text(dir / "S.csv", s);
  write_text(dir / "M.csv", m);
  write_text(dir / "pi.csv", pi);
  write_text(dir / "w.csv", w);
  write_text(dir / "mu.csv", mu);
  write_text(dir / "sigma2.csv", s2);
  write_text(dir / "log_joint.csv", log_joint_text(chain.log_joint));
}

nested::NestedChain read_nested_chain(const fs::path& dir, int K, int L,
                                      Eigen::Index I, Eigen::Index J) {
  const auto S = read_num_table(dir / "S.csv", static_cast<std::size_t>(J + 1));
  const std::size_t n = S.rows.size();
  const auto M = read_num_table(dir / "M.csv", static_cast<std::size_t>(I + 2));
  const auto pi = read_num_table(dir / "pi.csv", static_cast<std::size_t>(K + 1));
  const auto w = read_num_table(dir / "w.csv", static_cast<std::size_t>(L + 2));
  const auto mu = read_num_table(dir / "mu.csv", static_cast<std::size_t>(L + 1));
  const auto s2 = read_num_table(dir / "sigma2.csv", static_cast<std::size_t>(L + 1));
  check_rows(M, n * static_cast<std::size_t>(K), dir / "M.csv");
  check_rows(w, n * static_cast<std::size_t>(K), dir / "w.csv");
  check_rows(pi, n, dir / "pi.csv");
  check_rows(mu, n, dir / "mu.csv");
  check_rows(s2, n, dir / "sigma2.csv");
  nested::NestedChain chain;
  chain.log_joint = read_log_joint(dir / "log_joint.csv");
  for (std::size_t r = 0; r < n; ++r) {
    nested::NestedDraw d;
    d.iteration = static_cast<std::size_t>(S.rows[r][0]);
    for (Eigen::Index j = 0; j < J; ++j) {
      d.S.push_back(to_label(S.rows[r][static_cast<std::size_t>(j + 1)], dir / "S.csv"));
    }
    d.M.resize(K, I);
    d.w.resize(K, L);
    for (int k = 0; k < K; ++k) {
      const auto& mr = M.rows[r * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
      const auto& wr = w.rows[r * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
      if (static_cast<std::size_t>(mr[0]) != d.iteration || mr[1] != k ||
          static_cast<std::size_t>(wr[0]) != d.iteration || wr[1] != k) {
        throw IoError(dir.string() + ": M.csv/w.csv rows out of order");
      }
      for (Eigen::Index i = 0; i < I; ++i) {
        d.M(k, i) = to_label(mr[static_cast<std::size_t>(i + 2)], dir / "M.csv");
      }
      for (int l = 0; l < L; ++l) d.w(k, l) = wr[static_cast<std::size_t>(l + 2)];
    }
    d.pi.resize(K);
    for (int k = 0; k < K; ++k) d.pi(k) = pi.rows[r][static_cast<std::size_t>(k + 1)];
    d.mu.resize(L);
    d.sigma2.resize(L);
    for (int l = 0; l < L; ++l) {
      d.mu(l) = mu.rows[r][static_cast<std::size_t>(l + 1)];
      d.sigma2(l) = s2.rows[r][static_cast<std::size_t>(l + 1)];
    }
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

void write_ddp_chain(const fs::path& dir, const ddp::DdpChain& chain) {
  fs::create_directories(dir);
  if (chain.draws.empty()) {
    throw ValidationError("chain holds no retained draws");
  }
  const auto& d0 = chain.draws.front();
  const Eigen::Index H = d0.pi.size();
  const bool with_gamma = d0.gamma.size() > 0;
  std::string s = header_line("iter", "s_", static_cast<Eigen::Index>(d0.s.size()));
  std::string pi = header_line("iter", "pi_", H);
  std::string beta = "iter,h" + header_line("", "beta_", ddp::kCoef);
  std::string s2 = header_line("iter", "sigma2_", H);
  std::string delta = header_line("iter", "delta_", d0.delta.size());
  std::string alpha = header_line("iter", "alpha_", d0.alpha.size());
  std::string gamma = header_line("iter", "gamma_", d0.gamma.size());
  for (const auto& d : chain.draws) {
    append_labels(s, d.iteration, d.s);
    append_row(pi, d.iteration, d.pi);
    for (Eigen::Index h = 0; h < H; ++h) {
      append_int(beta, static_cast<long>(d.iteration));
      beta += ',';
      append_row(beta, static_cast<std::size_t>(h), ddp::CoefVector(d.beta.row(h).transpose()));
    }
    append_row(s2, d.iteration, d.sigma2);
    append_row(delta, d.iteration, d.delta);
    append_row(alpha, d.iteration, d.alpha);
    if (with_gamma) append_row(gamma, d.iteration, d.gamma);
  }
  write_text(dir / "s.csv", s);
  write_text(dir / "pi.csv", pi);
  write_text(dir / "beta.csv", beta);
  write_text(dir / "sigma2.csv", s2);
  write_text(dir / "delta.csv", delta);
  write_text(dir / "alpha.csv", alpha);
  if (with_gamma) write_text(dir / "gamma.csv", gamma);
  write_text(dir / "log_joint.csv", log_joint_text(chain.log_joint));
}

ddp::DdpChain read_ddp_chain(const fs::path& dir, int H, Eigen::Index I, int T,
                             bool with_gamma) {
  const auto s = read_num_table(dir / "s.csv", static_cast<std::size_t>(I + 1));
  const std::size_t n = s.rows.size();
  const auto pi = read_num_table(dir / "pi.csv", static_cast<std::size_t>(H + 1));
  const auto beta = read_num_table(dir / "beta.csv", static_cast<std::size_t>(ddp::kCoef + 2));
  const auto s2 = read_num_table(dir / "sigma2.csv", static_cast<std::size_t>(H + 1));
  const auto delta = read_num_table(dir / "delta.csv", static_cast<std::size_t>(T + 1));
  const auto alpha = read_num_table(dir / "alpha.csv", static_cast<std::size_t>(I + 1));
  check_rows(pi, n, dir / "pi.csv");
  check_rows(beta, n * static_cast<std::size_t>(H), dir / "beta.csv");
  check_rows(s2, n, dir / "sigma2.csv");
  check_rows(delta, n, dir / "delta.csv");
  check_rows(alpha, n, dir / "alpha.csv");
  NumTable gamma;
  if (with_gamma) {
    gamma = read_num_table(dir / "gamma.csv", static_cast<std::size_t>(I + 1));
    check_rows(gamma, n, dir / "gamma.csv");
  }
  ddp::DdpChain chain;
  chain.log_joint = read_log_joint(dir / "log_joint.csv");
  const auto fill = [](const std::vector<double>& row, Eigen::Index len) {
    Eigen::VectorXd v(len);
    for (Eigen::Index k = 0; k < len; ++k) v(k) = row[static_cast<std::size_t>(k + 1)];
    return v;
  };
  for (std::size_t r = 0; r < n; ++r) {
    ddp::DdpDraw d;
    d.iteration = static_cast<std::size_t>(s.rows[r][0]);
    for (Eigen::Index i = 0; i < I; ++i) {
      d.s.push_back(to_label(s.rows[r][static_cast<std::size_t>(i + 1)], dir / "s.csv"));
    }
    d.pi = fill(pi.rows[r], H);
    d.beta.resize(H, ddp::kCoef);
    for (int h = 0; h < H; ++h) {
      const auto& br = beta.rows[r * static_cast<std::size_t>(H) + static_cast<std::size_t>(h)];
      if (static_cast<std::size_t>(br[0]) != d.iteration || br[1] != h) {
        throw IoError(dir.string() + ": beta.csv rows out of order");
      }
      for (int c = 0; c < ddp::kCoef; ++c) d.beta(h, c) = br[static_cast<std::size_t>(c + 2)];
    }
    d.sigma2 = fill(s2.rows[r], H);
    d.delta = fill(delta.rows[r], T);
    d.alpha = fill(alpha.rows[r], I);
    if (with_gamma) d.gamma = fill(gamma.rows[r], I);
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

Json read_manifest(const fs::path& root) {
  const Json m = read_json(root / kManifestFile);
  if (!m.contains("format_version") || m.at("format_version").get<int>() != kFormatVersion) {
    throw IoError(root.string() + ": unsupported archive format version");
  }
  if (!m.contains("storage") || m.at("storage").get<std::string>() != "csv") {
    throw IoError(root.string() + ": unsupported draw storage");
  }
  return m;
}

namespace {

std::vector<std::size_t> chains_to_read(const Json& m, std::optional<std::size_t> only) {
  const auto chains = m.at("chains").get<std::size_t>();
  if (only) {
    if (*only >= chains) {
      throw ParameterError("chain " + std::to_string(*only) + " not in archive (" +
                           std::to_string(chains) + " chains)");
    }
    return {*only};
  }
  std::vector<std::size_t> all(chains);
  for (std::size_t c = 0; c < chains; ++c) all[c] = c;
  return all;
}

void check_draw_count(const Json& m, std::size_t got, std::size_t iters,
                      const fs::path& root) {
  const auto want = m.at("draws_per_chain").get<std::size_t>();
  if (got != want) {
    throw IoError(root.string() + ": manifest declares " + std::to_string(want) +
                  " draws per chain, files hold " + std::to_string(got));
  }
  if (iters != m.at("run").at("iters").get<std::size_t>()) {
    throw IoError(root.string() + ": log_joint trace length disagrees with manifest");
  }
}

}  // namespace

NestedArchive read_nested_archive(const fs::path& root,
                                  std::optional<std::size_t> only_chain) {
  NestedArchive a;
  a.manifest = read_manifest(root);
  if (a.manifest.at("model") != "nested") {
    throw ValidationError(root.string() + " does not hold a nested-model archive");
  }
  const auto& cfg = a.manifest.at("config");
  const auto& dims = a.manifest.at("dims");
  for (std::size_t c : chains_to_read(a.manifest, only_chain)) {
    auto chain = read_nested_chain(chain_dir(root, c), cfg.at("K").get<int>(),
                                   cfg.at("L").get<int>(), dims.at("I").get<Eigen::Index>(),
                                   dims.at("J").get<Eigen::Index>());
    check_draw_count(a.manifest, chain.draws.size(), chain.log_joint.size(), root);
    a.chains.push_back(std::move(chain));
  }
  return a;
}

DdpArchive read_ddp_archive(const fs::path& root, std::optional<std::size_t> only_chain) {
  DdpArchive a;
  a.manifest = read_manifest(root);
  if (a.manifest.at("model") != "ddp") {
    throw ValidationError(root.string() + " does not hold a DDP archive");
  }
  const auto& cfg = a.manifest.at("config");
  const auto& dims = a.manifest.at("dims");
  for (std::size_t c : chains_to_read(a.manifest, only_chain)) {
    auto chain = read_ddp_chain(chain_dir(root, c), cfg.at("H").get<int>(),
                                dims.at("I").get<Eigen::Index>(), dims.at("T").get<int>(),
                                a.manifest.at("has_gamma").get<bool>());
    check_draw_count(a.manifest, chain.draws.size(), chain.log_joint.size(), root);
    a.chains.push_back(std::move(chain));
  }
  return a;
}

}  // namespace sepex::io
