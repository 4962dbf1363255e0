// Apache License, Version 2.0, refer to LICENSE.txt

// Command-line front end. Every subcommand builds a JSON options object
// (config file first, flags on top) and hands it to the C API.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sepex/sepex.h"

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kUsageExit = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::size_t> chains;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, "JSON config file (an archive manifest also works)")
      ->check(CLI::ExistingFile);
  app->add_option("--chains", c.chains, "Number of independent chains")
      ->check(CLI::PositiveNumber);
  auto* out = app->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
}

// Config file contents, with relative paths anchored at the file.
Json base_options(const Common& c) {
  Json o = Json::object();
  if (c.config) {
    std::ifstream in(*c.config);
    std::stringstream ss;
    ss << in.rdbuf();
    o = Json::parse(ss.str());
    if (!o.is_object()) throw std::runtime_error(*c.config + ": config must be a JSON object");
    o["base_dir"] = fs::absolute(fs::path(*c.config)).parent_path().string();
  }
  if (c.seed) o["seed"] = *c.seed;
  if (c.chains) o["chains"] = *c.chains;
  if (c.out) o["out"] = *c.out;
  return o;
}

template <typename T>
void set(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void set_in(Json& j, const char* section, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if (!j.contains(section) || !j[section].is_object()) j[section] = Json::object();
  j[section][key] = *v;
}

int report(sepex_context* ctx, int status) {
  if (status != SEPEX_OK) {
    std::cerr << "sepex: " << sepex_status_string(status) << ": " << sepex_last_error(ctx)
              << "\n";
    return 2 + status;
  }
  std::cout << sepex_last_result(ctx) << "\n";
  return 0;
}

void check_model(Json& o, const std::string& model) {
  if (o.contains("model") && o.at("model") != model) {
    throw std::runtime_error("config is for model '" + o.at("model").get<std::string>() +
                             "', expected '" + model + "'");
  }
  o["model"] = model;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sepex: nested and dependent mixture models for matrix-valued data"};
  app.set_version_flag("--version", std::string(sepex_version()));
  app.require_subcommand(1);

  // simulate
  Common sim_c;
  std::optional<std::string> sim_model;
  std::optional<std::size_t> sim_I, sim_J, sim_paired;
  std::optional<double> sim_sep, sim_delta_sd;
  std::optional<std::vector<double>> sim_effect;
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset and its truth");
  add_common(sim, sim_c, true);
  sim->add_option("--model", sim_model, "protein | nested")
      ->check(CLI::IsMember({"protein", "nested"}));
  sim->add_option("--proteins,--rows,-I", sim_I, "Number of proteins / rows");
  sim->add_option("--subjects,-J", sim_J, "Number of subjects");
  sim->add_option("--paired-times", sim_paired,
                  "protein: one control and one patient at each of this many times");
  sim->add_option("--delta-sd", sim_delta_sd, "protein: sd of subject effects");
  sim->add_option("--patient-effect", sim_effect, "protein: patient slope per cluster")
      ->expected(3);
  sim->add_option("--separation", sim_sep, "nested: atom spacing (sigma2 = 1)");

  // fit-nested
  Common fn_c;
  std::optional<std::string> fn_data, fn_norm;
  std::optional<bool> fn_log;
  std::optional<int> fn_K, fn_L;
  std::optional<double> fn_alpha, fn_beta;
  std::optional<std::size_t> fn_iters, fn_burnin, fn_thin;
  bool fn_no_eb = false;
  auto* fn = app.add_subcommand("fit-nested", "Run the nested common-atoms sampler");
  add_common(fn, fn_c, true);
  fn->add_option("--data", fn_data, "Matrix CSV: id column, then one column per subject");
  fn->add_option("--normalize", fn_norm, "rel_freq | avg_library | none")
      ->check(CLI::IsMember({"rel_freq", "avg_library", "none"}));
  fn->add_flag("--log{true},--no-log{false}", fn_log, "Log-transform after normalizing");
  fn->add_option("--K", fn_K, "Subject-cluster truncation");
  fn->add_option("--L", fn_L, "Atom truncation");
  fn->add_option("--alpha", fn_alpha, "Stick mass of the row weights");
  fn->add_option("--beta", fn_beta, "Stick mass of the subject weights");
  fn->add_option("--iters", fn_iters, "Total iterations");
  fn->add_option("--burnin", fn_burnin, "Burn-in iterations");
  fn->add_option("--thin", fn_thin, "Thinning interval");
  fn->add_flag("--no-empirical-bayes", fn_no_eb, "Do not centre the atom prior on the data");

  // fit-ddp
  Common fd_c;
  std::optional<std::string> fd_data;
  std::optional<int> fd_H;
  std::optional<double> fd_xi, fd_tmin, fd_tmax;
  std::optional<std::string> fd_scale;
  std::optional<std::size_t> fd_iters, fd_burnin, fd_thin;
  auto* fd = app.add_subcommand("fit-ddp", "Run the ANOVA DDP spline-mixture sampler");
  add_common(fd, fd_c, true);
  fd->add_option("--data", fd_data, "Long CSV: protein_id, subject_id, y, z, t");
  fd->add_option("--H", fd_H, "Cluster truncation");
  fd->add_option("--xi", fd_xi, "DP mass");
  fd->add_option("--time-scale", fd_scale,
                 "Spline argument: index (1..T, default) or raw (recorded t)")
      ->check(CLI::IsMember({"index", "raw"}));
  fd->add_option("--t-min", fd_tmin, "Lower spline boundary (default: smallest time)");
  fd->add_option("--t-max", fd_tmax, "Upper spline boundary (default: largest time)");
  fd->add_option("--iters", fd_iters, "Total iterations");
  fd->add_option("--burnin", fd_burnin, "Burn-in iterations");
  fd->add_option("--thin", fd_thin, "Thinning interval");

  // summarize
  Common su_c;
  std::optional<std::string> su_archive;
  std::optional<std::size_t> su_chain, su_cond_iters;
  bool su_filter = false;
  auto* su = app.add_subcommand("summarize", "Point estimates, co-clustering and gamma");
  add_common(su, su_c, true);
  su->add_option("--archive", su_archive, "Chain archive directory")->required();
  su->add_option("--chain", su_chain, "Use a single chain instead of pooling");
  su->add_flag("--filter", su_filter,
               "nested: filter draws matching the subject estimate instead of re-running");
  su->add_option("--conditional-iters", su_cond_iters, "nested: iterations of the re-run");

  // rank
  Common rk_c;
  std::optional<std::string> rk_archive;
  std::optional<double> rk_c_level;
  std::optional<std::size_t> rk_top, rk_chain;
  auto* rk = app.add_subcommand("rank", "Quantile ranking of |gamma|");
  add_common(rk, rk_c, true);
  rk->add_option("--archive", rk_archive, "DDP chain archive directory")->required();
  rk->add_option("--c", rk_c_level, "Quantile level in (0, 1), default 0.975");
  rk->add_option("--top", rk_top, "Report this many items instead of ceil((1-c)(I+1))");
  rk->add_option("--chain", rk_chain, "Use a single chain instead of pooling");

  // check-exch
  Common ce_c;
  std::optional<std::string> ce_model;
  std::optional<std::size_t> ce_draws;
  auto* ce = app.add_subcommand("check-exch", "Monte Carlo exchangeability checks");
  add_common(ce, ce_c, false);
  ce->add_option("--model", ce_model, "all | nested | ddp | reference")
      ->check(CLI::IsMember({"all", "nested", "ddp", "reference"}));
  ce->add_option("--draws", ce_draws, "Prior draws per check (default 100000)");

  // diagnose
  Common dg_c;
  std::optional<std::string> dg_archive;
  std::optional<std::size_t> dg_chain;
  auto* dg = app.add_subcommand("diagnose", "Residual Q-Q data, KS test and R^2");
  add_common(dg, dg_c, true);
  dg->add_option("--archive", dg_archive, "DDP chain archive directory")->required();
  dg->add_option("--chain", dg_chain, "Use a single chain instead of pooling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  sepex_context* ctx = sepex_context_create();
  if (ctx == nullptr) return 1;
  int code = 0;
  try {
    Json o;
    std::string body;
    if (sim->parsed()) {
      o = base_options(sim_c);
      set(o, "model", sim_model);
      set(o, "I", sim_I);
      set(o, "J", sim_J);
      set(o, "paired_times", sim_paired);
      set(o, "delta_sd", sim_delta_sd);
      set(o, "patient_effect", sim_effect);
      set(o, "separation", sim_sep);
      code = report(ctx, sepex_simulate(ctx, o.dump().c_str()));
    } else if (fn->parsed()) {
      o = base_options(fn_c);
      check_model(o, "nested");
      if (fn_data) {
        o["data"] = *fn_data;
        o.erase("source");
      }
      set(o, "normalization", fn_norm);
      set(o, "log_transform", fn_log);
      if (fn_no_eb) o["empirical_bayes"] = false;
      set_in(o, "config", "K", fn_K);
      set_in(o, "config", "L", fn_L);
      set_in(o, "config", "alpha", fn_alpha);
      set_in(o, "config", "beta", fn_beta);
      set_in(o, "run", "iters", fn_iters);
      set_in(o, "run", "burnin", fn_burnin);
      set_in(o, "run", "thin", fn_thin);
      code = report(ctx, sepex_fit(ctx, o.dump().c_str()));
    } else if (fd->parsed()) {
      o = base_options(fd_c);
      check_model(o, "ddp");
      if (fd_data) {
        o["data"] = *fd_data;
        o.erase("source");
        o.erase("basis");
      }
      if (fd_tmin || fd_tmax || fd_scale) o.erase("basis");
      set(o, "time_scale", fd_scale);
      set(o, "t_min", fd_tmin);
      set(o, "t_max", fd_tmax);
      set_in(o, "config", "H", fd_H);
      set_in(o, "config", "xi", fd_xi);
      set_in(o, "run", "iters", fd_iters);
      set_in(o, "run", "burnin", fd_burnin);
      set_in(o, "run", "thin", fd_thin);
      code = report(ctx, sepex_fit(ctx, o.dump().c_str()));
    } else if (su->parsed()) {
      o = base_options(su_c);
      o["archive"] = *su_archive;
      set(o, "chain", su_chain);
      set(o, "conditional_iters", su_cond_iters);
      if (su_filter) o["filter"] = true;
      code = report(ctx, sepex_summarize(ctx, o.dump().c_str()));
    } else if (rk->parsed()) {
      o = base_options(rk_c);
      o["archive"] = *rk_archive;
      set(o, "c", rk_c_level);
      set(o, "top", rk_top);
      set(o, "chain", rk_chain);
      code = report(ctx, sepex_rank(ctx, o.dump().c_str()));
    } else if (ce->parsed()) {
      o = base_options(ce_c);
      set(o, "model", ce_model);
      set(o, "draws", ce_draws);
      int pass = 0;
      code = report(ctx, sepex_check_exch(ctx, o.dump().c_str(), &pass));
      if (code == 0 && !pass) code = 1;
    } else if (dg->parsed()) {
      o = base_options(dg_c);
      o["archive"] = *dg_archive;
      set(o, "chain", dg_chain);
      code = report(ctx, sepex_diagnose(ctx, o.dump().c_str()));
    }
  } catch (const std::exception& e) {
    std::cerr << "sepex: " << e.what() << "\n";
    code = kUsageExit;
  }
  sepex_context_destroy(ctx);
  return code;
}
