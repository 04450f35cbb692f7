#pragma once

#include "partivae/io.hpp"
#include "partivae/targets.hpp"
#include "partivae/vae.hpp"

#include <optional>
#include <string>
#include <vector>

namespace partivae::config {

struct TargetSpec {
  std::string kind;  // "ising" | "sbm" | "ranking"
  // ising
  int L = 0;
  double beta = 0.0;
  // sbm
  std::string graph_path;
  std::optional<int> declared_n;
  double omega_in = 0.2;
  double omega_out = 0.05;
  bool learn_omega = true;
  // ranking
  int n = 0;
  std::string comparisons_path;       // exclusive with synthetic_m
  std::optional<long> synthetic_m;    // generate a planted instance
  std::optional<std::uint64_t> synthetic_seed;
  double w = 0.75;
  bool learn_w = false;
};

struct McmcSpec {
  long n_sweeps = 10000;
  long burn_in = -1;  // negative: 10% of n_sweeps
  long thin = 1;
  bool adjacent_transpositions = false;
};

struct OracleSpec {
  int top_states = 0;
};

struct SampleSpec {
  std::string model_path;
  long n = 1000;
};

struct EstimateSpec {
  std::string model_path;
  long n_samples = 100000;
};

struct ExperimentConfig {
  TargetSpec target;
  int D = 1;
  bool latent_given = false;
  std::vector<int> D_set;  // non-empty when sweeping
  vae::TrainConfig train;  // seed mirrored from the top-level seed
  McmcSpec mcmc;
  OracleSpec oracle;
  SampleSpec sample;
  EstimateSpec estimate;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
};

// Parses and validates a config file. Unknown keys anywhere are errors;
// all numeric fields are range-checked. Dataset files are NOT opened here.
ExperimentConfig load_config(const std::string& path);

// The resolved config (defaults filled in) as canonical-JSON-ready data;
// embedded in run records for provenance.
io::Json config_snapshot(const ExperimentConfig& cfg);

// Instantiates the target, loading datasets or generating the synthetic
// ranking instance (seeded from cfg.seed unless target.synthetic_seed set).
targets::TargetModel build_target(const ExperimentConfig& cfg);

}  // namespace partivae::config
