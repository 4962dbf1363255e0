// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <nlohmann/json.hpp>

namespace sepex::jobs {

using Json = nlohmann::ordered_json;

// Every job takes a JSON options object and returns a JSON result. The
// option keys match the config-file schema, so an archive manifest can be
// fed back as options to reproduce the run.

/// Keys: model ("protein" | "nested"), seed, out, plus model settings
/// (protein: I, J, paired_times, delta_sd, delta, patient_effect;
///  nested: I, J, separation, config).
Json simulate(const Json& options);

/// Keys: model ("nested" | "ddp"), data, seed, chains, out, run, config,
/// empirical_bayes, normalization, log_transform, t_min, t_max,
/// frozen_labels.
Json fit(const Json& options);

/// Keys: archive, out, chain, filter (nested: skip the conditional re-run),
/// conditional_iters.
Json summarize(const Json& options);

/// Keys: archive, out, c, top, chain.
Json rank(const Json& options);

/// Keys: model ("nested" | "ddp" | "reference" | "all"), draws, seed, out.
/// Result holds "pass" plus one report per check.
Json check_exch(const Json& options);

/// Keys: archive, out, seed, chain.
Json diagnose(const Json& options);

}  // namespace sepex::jobs
