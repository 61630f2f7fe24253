#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "airtran/dataset.hpp"
#include "airtran/matrix.hpp"

namespace airtran {

/// Synthetic model pool with known ground truth.
///
/// Every query has a unit-scale latent z ~ N(0, I_D / D); its relevant
/// document shares that latent, all other documents are independent. Model i
/// observes each item as (latent + noise_levels[i] * N(0, I_D / D)) * A_i^T + a * m_i
/// with A_i = I + a * G_i (G_i entries N(0, 1/D)) and m_i ~ N(0, I_D). Higher
/// noise means a worse model; `a` entangles dimensions and adds a common
/// offset that dominates raw dot products. Ground truth is 1 / (1 + noise).
struct SynthConfig {
  std::size_t model_count = 20;
  std::size_t query_count = 500;
  std::size_t candidate_size = 10;
  std::size_t dim = 32;
  std::vector<double> noise_levels;  ///< strictly increasing, one per model
  double anisotropy_strength = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Geometric spacing from `low` to `high`, inclusive.
std::vector<double> geometric_noise_levels(std::size_t count, double low, double high);

struct ModelEmbeddings {
  std::string model_id;
  EmbeddingMatrix queries;
  EmbeddingMatrix docs;
};

struct SynthPool {
  std::vector<ModelEmbeddings> models;
  std::vector<RelevantPair> relevant_pairs;
  RankingDataset dataset;
  ModelPoolTruth truth;
};

SynthPool generate_pool(const SynthConfig& config);

SynthConfig parse_synth_config(const std::string& json_text);
std::string format_synth_config(const SynthConfig& config);

/// Layout: <dir>/<model_id>/{queries,docs}.mat, manifest.jsonl, pairs.jsonl,
/// truth.json, config.json.
void write_pool(const SynthPool& pool, const SynthConfig& config, const std::filesystem::path& dir);

}  // namespace airtran
