#include "airtran/synth_pool.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "airtran/error.hpp"
#include "airtran/fs_util.hpp"
#include "airtran/random.hpp"

namespace airtran {

using nlohmann::json;

void SynthConfig::validate() const {
  if (model_count < 2) throw Error(ErrorKind::Config, "model_count must be at least 2");
  if (query_count < candidate_size) {
    throw Error(ErrorKind::Config, "query_count must be at least candidate_size (docs come from queries)");
  }
  if (candidate_size < 2) throw Error(ErrorKind::Config, "candidate_size must be at least 2");
  if (dim < 1) throw Error(ErrorKind::Config, "dim must be positive");
  if (noise_levels.size() != model_count) {
    throw Error(ErrorKind::Config, "noise_levels has " + std::to_string(noise_levels.size()) + " entries for " +
                                       std::to_string(model_count) + " models");
  }
  for (std::size_t i = 0; i < noise_levels.size(); ++i) {
    if (!(noise_levels[i] >= 0) || !std::isfinite(noise_levels[i])) {
      throw Error(ErrorKind::Config, "noise levels must be finite and non-negative");
    }
    if (i > 0 && !(noise_levels[i] > noise_levels[i - 1])) {
      throw Error(ErrorKind::Config, "noise levels must be strictly increasing");
    }
  }
  if (!(anisotropy_strength >= 0) || !std::isfinite(anisotropy_strength)) {
    throw Error(ErrorKind::Config, "anisotropy_strength must be finite and non-negative");
  }
}

std::vector<double> geometric_noise_levels(std::size_t count, double low, double high) {
  std::vector<double> levels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    levels[i] = low * std::pow(high / low, t);
  }
  return levels;
}

namespace {

Matrix<double> gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix<double> m(rows, cols);
  // Fill row by row so the stream order does not depend on storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

std::string model_id(std::size_t index, std::size_t count) {
  const int width = std::max<int>(2, static_cast<int>(std::to_string(count - 1).size()));
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "model-%0*zu", width, index);
  return buffer;
}

}  // namespace

SynthPool generate_pool(const SynthConfig& config) {
  config.validate();
  const auto dim = static_cast<Eigen::Index>(config.dim);
  const auto queries = static_cast<Eigen::Index>(config.query_count);
  const double a = config.anisotropy_strength;

  const double unit = 1.0 / std::sqrt(static_cast<double>(config.dim));

  Rng latent_rng(config.seed);
  const Matrix<double> query_latents = gaussian_matrix(latent_rng, queries, dim, unit);
  // Document i is the relevant document of query i.
  const Matrix<double>& doc_latents = query_latents;

  SynthPool pool;
  for (std::size_t q = 0; q < config.query_count; ++q) pool.relevant_pairs.push_back({q, q});
  SamplingOptions sampling;
  sampling.candidate_size = config.candidate_size;
  sampling.seed = config.seed;
  sampling.query_cap = 0;
  pool.dataset = sample_candidates(pool.relevant_pairs, config.query_count, sampling);

  for (std::size_t i = 0; i < config.model_count; ++i) {
    Rng rng = Rng::derive(config.seed, i);
    const double sigma = config.noise_levels[i];
    const Matrix<double> distortion = Matrix<double>::Identity(dim, dim) + gaussian_matrix(rng, dim, dim, a * unit);
    const RowVector<double> shift = a * gaussian_matrix(rng, 1, dim, 1.0);

    auto observe = [&](const Matrix<double>& latents) {
      const Matrix<double> noisy = latents + gaussian_matrix(rng, latents.rows(), dim, sigma * unit);
      const Matrix<double> distorted = (noisy * distortion.transpose()).rowwise() + shift;
      return EmbeddingMatrix(distorted.cast<float>());
    };
    ModelEmbeddings model;
    model.model_id = model_id(i, config.model_count);
    model.queries = observe(query_latents);
    model.docs = observe(doc_latents);
    pool.truth.entries.push_back({model.model_id, 1.0 / (1.0 + sigma)});
    pool.models.push_back(std::move(model));
  }
  return pool;
}

SynthConfig parse_synth_config(const std::string& json_text) {
  SynthConfig config;
  try {
    const json doc = json::parse(json_text);
    config.model_count = doc.value("model_count", config.model_count);
    config.query_count = doc.value("query_count", config.query_count);
    config.candidate_size = doc.value("candidate_size", config.candidate_size);
    config.dim = doc.value("dim", config.dim);
    config.anisotropy_strength = doc.value("anisotropy_strength", config.anisotropy_strength);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("noise_levels")) {
      config.noise_levels = doc.at("noise_levels").get<std::vector<double>>();
    } else {
      const auto range = doc.value("noise_range", std::vector<double>{0.5, 5.0});
      if (range.size() != 2 || !(range[0] > 0) || !(range[1] > range[0])) {
        throw Error(ErrorKind::Config, "noise_range must be [low, high] with 0 < low < high");
      }
      config.noise_levels = geometric_noise_levels(config.model_count, range[0], range[1]);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  config.validate();
  return config;
}

std::string format_synth_config(const SynthConfig& config) {
  const json doc = {{"model_count", config.model_count},
                    {"query_count", config.query_count},
                    {"candidate_size", config.candidate_size},
                    {"dim", config.dim},
                    {"noise_levels", config.noise_levels},
                    {"anisotropy_strength", config.anisotropy_strength},
                    {"seed", config.seed}};
  return doc.dump(2) + "\n";
}

void write_pool(const SynthPool& pool, const SynthConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& model : pool.models) {
    save_matrix(model.queries, dir / model.model_id / "queries.mat");
    save_matrix(model.docs, dir / model.model_id / "docs.mat");
  }
  save_manifest(pool.dataset, dir / "manifest.jsonl");
  write_file_atomic(dir / "pairs.jsonl", format_relevant_pairs(pool.relevant_pairs));
  write_file_atomic(dir / "truth.json", format_truth(pool.truth));
  write_file_atomic(dir / "config.json", format_synth_config(config));
}

}  // namespace airtran
