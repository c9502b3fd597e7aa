#pragma once

// JSON run configuration and report serialization. Loading resolves the
// mixture means deterministically from the seed when the config does not pin
// them explicitly, so the echoed config in report.json is always complete.

#include <string>

#include "klab/trainer.hpp"

namespace klab {

/// Parse a config JSON document; unknown keys are rejected, missing ones get
/// the documented defaults. Resolves mixture means if absent.
RunConfig parse_config_json(const std::string& text);

RunConfig load_config(const std::string& path);

/// Full echo of a resolved config (includes generated means).
std::string config_to_json_string(const RunConfig& config);

/// report.json payload: config echo, metric arrays, per-refresh priors and
/// center, flags, wall clock (labeled, excluded from determinism checks).
std::string report_to_json_string(const RunConfig& config, const RunReport& report,
                                  const std::string& checkpoint_path);

void write_run_outputs(const std::string& out_dir, const RunConfig& config,
                       const RunOutcome& outcome);

void write_compare_csv(const std::string& path, const CompareReport& report);

}  // namespace klab
