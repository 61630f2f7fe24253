#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "airtran/dataset.hpp"
#include "airtran/error.hpp"
#include "airtran/evaluation.hpp"
#include "airtran/scoring.hpp"
#include "airtran/synth_pool.hpp"

namespace airtran {

enum class Method { Airtran, Rank, Qtran, Loglik };

Method parse_method(const std::string& name);
const char* to_string(Method method) noexcept;

struct RunConfig {
  Method method = Method::Airtran;
  std::optional<std::size_t> k;
  std::uint64_t seed = 0;
  ScoreConfig score;
  std::size_t jobs = 1;
  bool record_timing = true;
  std::string dataset_name = "dataset";
};

/// Exit code for an error kind; stable and documented in the README.
int exit_code_for(ErrorKind kind) noexcept;

/// Models of a pool directory in id order (subdirectory names).
std::vector<ModelEmbeddings> load_pool(const std::filesystem::path& pool_dir);

/// Scores every model on the same dataset. Models run concurrently up to
/// config.jobs; entries come back sorted by descending score.
TransferabilityReport score_pool(const std::vector<ModelEmbeddings>& models, const RankingDataset& dataset,
                                 const RunConfig& config, std::ostream* log = nullptr,
                                 const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

/// Loads pool and manifest, scores, writes the report JSON atomically.
TransferabilityReport cmd_score(const std::filesystem::path& pool_dir, const std::filesystem::path& manifest,
                                const RunConfig& config, const std::optional<std::filesystem::path>& output,
                                std::ostream& log,
                                const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

EvalReport cmd_eval(const std::filesystem::path& report, const std::filesystem::path& truth,
                    const std::optional<std::filesystem::path>& output, std::ostream& log);

struct SweepRow {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string method;
  double tau = 0.0;
  double tau_b = 0.0;
  std::size_t best_rank = 0;
  double mean_seconds = 0.0;
};

struct SweepOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<Method> methods = {Method::Airtran};
  std::size_t query_cap = 1000;
};

std::vector<SweepRow> sweep(const std::vector<ModelEmbeddings>& models, const std::vector<RelevantPair>& pairs,
                            const ModelPoolTruth& truth, const SweepOptions& options, const RunConfig& config,
                            std::ostream* log = nullptr);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

std::vector<SweepRow> cmd_sweep(const std::filesystem::path& pool_dir, const std::filesystem::path& pairs_source,
                                const std::filesystem::path& truth, const SweepOptions& options,
                                const RunConfig& config, const std::filesystem::path& output, std::ostream& log);

void cmd_synth(const std::filesystem::path& config_json, const std::filesystem::path& out_dir, std::ostream& log);

RankingDataset cmd_sample(const std::filesystem::path& pairs_source, std::size_t doc_pool_size,
                          const SamplingOptions& options, const std::filesystem::path& output);

/// Renders tau-vs-k and seconds-vs-k SVG line charts from sweep rows.
std::string render_sweep_svg(const std::vector<SweepRow>& rows, bool seconds);

void cmd_plot(const std::filesystem::path& sweep_csv, const std::filesystem::path& output_prefix, std::ostream& log);

}  // namespace airtran
