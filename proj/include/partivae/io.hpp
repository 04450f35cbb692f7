#pragma once

#include "partivae/oracles.hpp"
#include "partivae/relax.hpp"
#include "partivae/targets.hpp"
#include "partivae/vae.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace partivae::io {

using Json = nlohmann::json;

// Canonical JSON: sorted keys, no whitespace, floats printed with 17
// significant digits ("%.17g"). Canonical output re-parses and re-serializes
// byte-identically.
std::string canonical_dump(const Json& j);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
Json read_json(const std::string& path);

// ---- target snapshots ----------------------------------------------------
Json target_to_json(const targets::TargetModel& t);
targets::TargetModel target_from_json(const Json& j);

Json estimate_to_json(const vae::ElboEstimate& e);

// ---- model files -----------------------------------------------------------
// Layout: magic "PVAEMDL1", little-endian u64 header length, canonical JSON
// header, then the tensors listed in the header as row-major little-endian
// 64-bit floats. The header embeds the full target snapshot so a model file
// is self-contained.
struct ModelFile {
  targets::TargetModel target;
  vae::Model model;
  relax::RelaxConfig relax;
  Json header;

  ModelFile() : target(targets::IsingTarget::torus(3, 0.0)) {}
};

void save_model(const std::string& path, const targets::TargetModel& target,
                const vae::Model& model, const relax::RelaxConfig& rc);
ModelFile load_model(const std::string& path);

// ---- CSV outputs -----------------------------------------------------------
void write_trace_csv(const std::string& path, const std::vector<double>& trace);

// Spins as +-1 integers; rankings as integer ranks 1..n.
void write_samples_csv(const std::string& path, const std::vector<Vector>& samples,
                       bool ranking, int n_cols);

void write_sweep_csv(const std::string& path, const vae::SweepResult& sweep);

void write_site_means_csv(const std::string& path, const Vector& means);
void write_pair_corr_csv(const std::string& path, const Matrix& corr);
void write_rank_position_csv(const std::string& path, const Matrix& position);

}  // namespace partivae::io
