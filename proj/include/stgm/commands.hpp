#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stgm/evaluation.hpp"
#include "stgm/inference.hpp"
#include "stgm/prediction.hpp"
#include "stgm/simulator.hpp"

namespace stgm {

inline constexpr const char* kVersion = "0.1.0";

// Effective run configuration: the JSON config file merged with CLI
// overrides. Every command is a pure function of (config, input files, seed).
struct RunConfig {
  std::vector<ModelKind> models;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  struct DataPaths {
    std::string sites, observations, covariates;
  };
  std::optional<DataPaths> data;

  struct SimConfig {
    ModelKind kind = ModelKind::A1;
    SimLayout layout;  // truth filled during parsing
  };
  std::optional<SimConfig> sim;

  std::vector<std::string> holdout_ids;
  int holdout_count = 0;  // used when ids empty: the last n sites in order

  bool log_input = true;     // apply the log transform on ingestion
  bool standardize_covariates = true;
  double missing_cap = 0.20;

  PriorSpec prior;
  McmcConfig mcmc;

  std::string targets_path;
  std::string chains_dir;  // defaults to out_dir
  double level = 0.95;
  std::string index_scale = "concentration";  // or "log"
  long max_pred_draws = 1000;
  bool include_latent = true;

  bool exploratory = false;
  std::vector<std::vector<int>> aic_candidates;

  std::string config_hash;  // FNV-1a of the canonical config dump
};

RunConfig load_config(const std::string& path);

// Subcommands; each writes its artifacts plus manifest.json under out_dir
// and throws stgm errors on failure (the CLI maps them to exit codes).
void cmd_simulate(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_validate(const RunConfig& cfg);
void cmd_compare(const RunConfig& cfg);

}  // namespace stgm
