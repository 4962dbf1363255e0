// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/sepex.h"

#include <exception>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sepex/error.hpp"
#include "sepex/io.hpp"
#include "sepex/jobs.hpp"
#include "sepex/summary.hpp"
#include "sepex/version.hpp"

struct sepex_context {
  std::string error;
  std::string result;
};

struct sepex_archive {
  std::variant<sepex::io::NestedArchive, sepex::io::DdpArchive> data;
};

namespace {

using sepex::jobs::Json;

// Null pointer arguments map to SEPEX_ERR_NULL.
struct NullArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename F>
int guarded(sepex_context* ctx, F&& f) {
  if (ctx == nullptr) return SEPEX_ERR_NULL;
  ctx->error.clear();
  try {
    f();
    return SEPEX_OK;
  } catch (const NullArgument& e) {
    ctx->error = e.what();
    return SEPEX_ERR_NULL;
  } catch (const sepex::Error& e) {
    ctx->error = e.what();
    switch (e.kind()) {
      case sepex::ErrorKind::parameter: return SEPEX_ERR_PARAMETER;
      case sepex::ErrorKind::validation: return SEPEX_ERR_VALIDATION;
      case sepex::ErrorKind::numerical: return SEPEX_ERR_NUMERICAL;
      case sepex::ErrorKind::io: return SEPEX_ERR_IO;
    }
    return SEPEX_ERR_INTERNAL;
  } catch (const nlohmann::json::exception& e) {
    ctx->error = std::string("invalid options: ") + e.what();
    return SEPEX_ERR_PARAMETER;
  } catch (const std::filesystem::filesystem_error& e) {
    ctx->error = e.what();
    return SEPEX_ERR_IO;
  } catch (const std::exception& e) {
    ctx->error = e.what();
    return SEPEX_ERR_INTERNAL;
  } catch (...) {
    ctx->error = "unknown error";
    return SEPEX_ERR_INTERNAL;
  }
}

Json parse_options(const char* text) {
  if (text == nullptr) throw NullArgument("options must not be null");
  Json j = Json::parse(text);
  if (!j.is_object()) throw sepex::ParameterError("options must be a JSON object");
  return j;
}

int run_job(sepex_context* ctx, const char* options, Json (*job)(const Json&)) {
  return guarded(ctx, [&] {
    ctx->result.clear();
    ctx->result = job(parse_options(options)).dump(2);
  });
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw NullArgument(std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* sepex_version(void) { return sepex::kVersion; }

const char* sepex_status_string(int status) {
  switch (status) {
    case SEPEX_OK: return "ok";
    case SEPEX_ERR_PARAMETER: return "parameter error";
    case SEPEX_ERR_VALIDATION: return "validation error";
    case SEPEX_ERR_NUMERICAL: return "numerical error";
    case SEPEX_ERR_IO: return "i/o error";
    case SEPEX_ERR_INTERNAL: return "internal error";
    case SEPEX_ERR_NULL: return "null argument";
  }
  return "unknown status";
}

sepex_context* sepex_context_create(void) {
  try {
    return new sepex_context();
  } catch (...) {
    return nullptr;
  }
}

void sepex_context_destroy(sepex_context* ctx) { delete ctx; }

const char* sepex_last_error(const sepex_context* ctx) {
  return ctx ? ctx->error.c_str() : "null context";
}

const char* sepex_last_result(const sepex_context* ctx) {
  return ctx ? ctx->result.c_str() : "";
}

int sepex_simulate(sepex_context* ctx, const char* o) {
  return run_job(ctx, o, &sepex::jobs::simulate);
}
int sepex_fit(sepex_context* ctx, const char* o) { return run_job(ctx, o, &sepex::jobs::fit); }
int sepex_summarize(sepex_context* ctx, const char* o) {
  return run_job(ctx, o, &sepex::jobs::summarize);
}
int sepex_rank(sepex_context* ctx, const char* o) { return run_job(ctx, o, &sepex::jobs::rank); }
int sepex_diagnose(sepex_context* ctx, const char* o) {
  return run_job(ctx, o, &sepex::jobs::diagnose);
}

int sepex_check_exch(sepex_context* ctx, const char* o, int* all_pass) {
  return guarded(ctx, [&] {
    ctx->result.clear();
    const Json r = sepex::jobs::check_exch(parse_options(o));
    if (all_pass) *all_pass = r.at("pass").get<bool>() ? 1 : 0;
    ctx->result = r.dump(2);
  });
}

int sepex_archive_open(sepex_context* ctx, const char* path, sepex_archive** out) {
  return guarded(ctx, [&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    const auto m = sepex::io::read_manifest(path);
    auto a = std::make_unique<sepex_archive>();
    if (m.at("model") == "nested") {
      a->data = sepex::io::read_nested_archive(path);
    } else {
      a->data = sepex::io::read_ddp_archive(path);
    }
    *out = a.release();
  });
}

void sepex_archive_close(sepex_archive* archive) { delete archive; }

int sepex_archive_info(sepex_context* ctx, const sepex_archive* a, size_t* chains,
                       size_t* draws_per_chain, size_t* items, size_t* iters) {
  return guarded(ctx, [&] {
    require(a, "archive");
    std::visit(
        [&](const auto& arch) {
          const auto& m = arch.manifest;
          if (chains) *chains = arch.chains.size();
          if (draws_per_chain) *draws_per_chain = m.at("draws_per_chain").template get<size_t>();
          if (iters) *iters = m.at("run").at("iters").template get<size_t>();
          if (items) {
            *items = m.at("model") == "nested" ? m.at("dims").at("J").template get<size_t>()
                                               : m.at("dims").at("I").template get<size_t>();
          }
        },
        a->data);
  });
}

int sepex_archive_labels(sepex_context* ctx, const sepex_archive* a, size_t chain,
                         size_t draw, int* out, size_t len) {
  return guarded(ctx, [&] {
    require(a, "archive");
    require(out, "out");
    const std::vector<int>* labels = nullptr;
    if (const auto* n = std::get_if<sepex::io::NestedArchive>(&a->data)) {
      if (chain >= n->chains.size() || draw >= n->chains[chain].draws.size()) {
        throw sepex::ParameterError("chain or draw index out of range");
      }
      labels = &n->chains[chain].draws[draw].S;
    } else {
      const auto& d = std::get<sepex::io::DdpArchive>(a->data);
      if (chain >= d.chains.size() || draw >= d.chains[chain].draws.size()) {
        throw sepex::ParameterError("chain or draw index out of range");
      }
      labels = &d.chains[chain].draws[draw].s;
    }
    if (len != labels->size()) throw sepex::ParameterError("label buffer has the wrong length");
    std::copy(labels->begin(), labels->end(), out);
  });
}

int sepex_archive_log_joint(sepex_context* ctx, const sepex_archive* a, size_t chain,
                            double* out, size_t len) {
  return guarded(ctx, [&] {
    require(a, "archive");
    require(out, "out");
    std::visit(
        [&](const auto& arch) {
          if (chain >= arch.chains.size()) throw sepex::ParameterError("chain out of range");
          const auto& lj = arch.chains[chain].log_joint;
          if (len != lj.size()) throw sepex::ParameterError("buffer has the wrong length");
          std::copy(lj.begin(), lj.end(), out);
        },
        a->data);
  });
}

int sepex_binder_point_estimate(sepex_context* ctx, const int* labels, size_t n_draws,
                                size_t n_items, int* out_labels, double* out_loss) {
  return guarded(ctx, [&] {
    require(labels, "labels");
    require(out_labels, "out_labels");
    if (n_draws == 0 || n_items == 0) throw sepex::ParameterError("need draws and items");
    std::vector<sepex::Partition> draws;
    for (size_t m = 0; m < n_draws; ++m) {
      draws.push_back(sepex::Partition::from_labels(
          std::span<const int>(labels + m * n_items, n_items)));
    }
    const auto est = sepex::summary::dahl_point_estimate(draws);
    std::copy(est.partition.labels().begin(), est.partition.labels().end(), out_labels);
    if (out_loss) *out_loss = est.loss;
  });
}

int sepex_rank_quantile(sepex_context* ctx, const double* gamma, size_t n_draws,
                        size_t n_items, double c, size_t top, double* exceed_prob,
                        int* r_star, int* selected) {
  return guarded(ctx, [&] {
    require(gamma, "gamma");
    if (n_draws == 0 || n_items == 0) throw sepex::ParameterError("need draws and items");
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n_draws), static_cast<Eigen::Index>(n_items));
    for (size_t m = 0; m < n_draws; ++m) {
      for (size_t i = 0; i < n_items; ++i) {
        g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = gamma[m * n_items + i];
      }
    }
    const auto rep = sepex::summary::rank_quantile(
        g, c, top > 0 ? std::optional<std::size_t>(top) : std::nullopt);
    for (size_t i = 0; i < n_items; ++i) {
      if (exceed_prob) exceed_prob[i] = rep.exceed_prob(static_cast<Eigen::Index>(i));
      if (r_star) r_star[i] = rep.r_star[i];
      if (selected) selected[i] = 0;
    }
    if (selected) {
      for (size_t i : rep.selected) selected[i] = 1;
    }
  });
}

}  // extern "C"
