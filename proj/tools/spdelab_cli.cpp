// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

// spdelab: configuration-driven experiment runner.
//   spdelab converge --problem P3 --axis temporal --levels 6 --samples 200 --seed 42
//   spdelab lemma --id Fh1_i --mu 2 --nu 0 --space spectral
//   spdelab --config run.json

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spdelab/spdelab.h"

namespace {

const std::vector<std::string> kKeys = {
    "problem", "beta",  "intensity", "T",       "axis",        "levels",      "space",
    "fixed",   "ref_size", "k_ref",  "samples", "p",           "seed",        "basis_modes",
    "noise_modes", "bias_check", "id", "mu",    "nu",          "rho",         "lags",
    "t0",      "trials", "csv",       "manifest", "svg",       "threads",     "expect"};

const std::set<std::string> kStringKeys = {"problem", "axis", "space", "id", "csv", "manifest",
                                           "svg"};

// Flag text to a JSON value: strings stay strings, "a,b,c" becomes an array,
// everything else is read as a JSON scalar when it parses as one.
nlohmann::ordered_json flag_value(const std::string& key, const std::string& text) {
  using Json = nlohmann::ordered_json;
  if (kStringKeys.count(key)) return text;
  if (text.find(',') != std::string::npos && text.front() != '[') {
    Json arr = Json::parse("[" + text + "]", nullptr, false);
    if (!arr.is_discarded()) return arr;
    return text;
  }
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) return text;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spdelab: strong convergence experiments for the stochastic heat equation"};
  app.set_version_flag("--version", spdelab_version());
  std::string command, config_path;
  app.add_option("command", command, "lemma, converge, holder or probe");
  app.add_option("--config", config_path, "JSON experiment file; flags override its keys");
  std::map<std::string, std::string> flags;
  for (const auto& k : kKeys) app.add_option("--" + k, flags[k], "config key '" + k + "'");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::fprintf(stderr, "I/O error: cannot read %s\n", config_path.c_str());
      return 3;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = nlohmann::ordered_json::parse(ss.str(), nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) {
      std::fprintf(stderr, "config error: %s is not a JSON object\n", config_path.c_str());
      return 2;
    }
  }
  if (!command.empty()) cfg["command"] = command;
  for (const auto& k : kKeys)
    if (app.count("--" + k) > 0) cfg[k] = flag_value(k, flags[k]);

  std::vector<char> diag(1 << 16, '\0');
  const int rc = spdelab_run_experiment(cfg.dump().c_str(), diag.data(), diag.size());
  std::fputs(diag.data(), rc == 0 || rc == 1 ? stdout : stderr);
  return rc;
}
