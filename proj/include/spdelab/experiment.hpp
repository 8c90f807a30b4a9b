// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spdelab {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitIo = 3 };

struct ValidatedConfig {
  std::vector<std::string> errors;  // every problem found, in key order
  nlohmann::ordered_json config;    // defaults filled in; meaningful when errors is empty
  bool ok() const noexcept { return errors.empty(); }
};

/// Parses and checks a JSON experiment document. Unknown keys, wrong types
/// and out-of-range values are all reported; nothing is thrown.
ValidatedConfig validate_config(std::string_view text);

/// FNV-1a 64-bit hash, printed as 16 hex digits by config_digest.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Digest of the scientific content of a validated config (output paths and
/// the thread count are excluded).
std::string config_digest(const nlohmann::ordered_json& config);

struct ExperimentOutcome {
  int exit_code = kExitConfig;
  std::string diagnostics;  // human-readable summary or error list
  std::string digest;
  std::string csv;          // the CSV body that was written
};

/// Validates, runs and writes the CSV, manifest and optional SVG.
/// SPDELAB_SEED, when set, replaces the configured seed.
ExperimentOutcome run_experiment(std::string_view text);

}  // namespace spdelab
