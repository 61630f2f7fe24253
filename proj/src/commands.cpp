#include "airtran/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "airtran/fs_util.hpp"

namespace airtran {

namespace fs = std::filesystem;

Method parse_method(const std::string& name) {
  if (name == "airtran") return Method::Airtran;
  if (name == "rank") return Method::Rank;
  if (name == "qtran") return Method::Qtran;
  if (name == "loglik") return Method::Loglik;
  throw Error(ErrorKind::Config, "unknown method \"" + name + "\" (airtran|rank|qtran|loglik)");
}

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::Airtran: return "airtran";
    case Method::Rank: return "rank";
    case Method::Qtran: return "qtran";
    case Method::Loglik: return "loglik";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return 2;
    case ErrorKind::Format:
    case ErrorKind::Version:
    case ErrorKind::Length:
    case ErrorKind::Data:
    case ErrorKind::Schema:
    case ErrorKind::Shape:
    case ErrorKind::EmptyInput: return 3;
    case ErrorKind::Numeric:
    case ErrorKind::Singularity:
    case ErrorKind::DegenerateInput: return 4;
    case ErrorKind::Mismatch: return 5;
    case ErrorKind::Config:
    case ErrorKind::Capacity: return 6;
  }
  return 1;
}

std::vector<ModelEmbeddings> load_pool(const fs::path& pool_dir) {
  if (!fs::is_directory(pool_dir)) throw Error(ErrorKind::Io, "pool directory " + pool_dir.string() + " not found");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(pool_dir)) {
    if (entry.is_directory() && entry.path().filename().string().front() != '.') dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorKind::Io, "pool directory " + pool_dir.string() + " has no model subdirectories");

  std::vector<ModelEmbeddings> models;
  for (const auto& dir : dirs) {
    ModelEmbeddings model;
    model.model_id = dir.filename().string();
    try {
      model.queries = load_matrix(dir / "queries.mat");
      model.docs = load_matrix(dir / "docs.mat");
    } catch (const Error& e) {
      rethrow_with_context(e, "model " + model.model_id);
    }
    models.push_back(std::move(model));
  }
  return models;
}

namespace {

ScoreConfig effective_config(const RunConfig& config) {
  ScoreConfig score = config.score;
  if (config.method == Method::Rank || config.method == Method::Loglik) {
    score.use_whitening = false;
    score.use_adaptive_scaling = false;
  }
  return score;
}

struct ModelResult {
  double score = 0.0;
  double seconds = 0.0;
};

ModelResult score_model(const ModelEmbeddings& model, const RankingDataset& dataset, const RunConfig& config,
                        const std::optional<fs::path>& dump_dir) {
  const ScoreConfig score_config = effective_config(config);
  ModelResult result;
  const auto start = std::chrono::steady_clock::now();
  std::optional<TransformedEmbeddings> transformed;
  switch (config.method) {
    case Method::Airtran:
    case Method::Rank: {
      auto airtran = airtran_score(dataset, model.queries, model.docs, score_config);
      result.score = airtran.score;
      transformed = std::move(airtran.transformed);
      break;
    }
    case Method::Qtran: {
      transformed = transform_embeddings(dataset, model.queries, model.docs, score_config);
      QualityOptions options;
      options.seed = config.seed;
      result.score = quality_score(dataset, transformed->queries, transformed->docs, options,
                                   &transformed->weights)
                         .total;
      break;
    }
    case Method::Loglik:
      result.score = log_likelihood_score(dataset, model.queries.cast<double>(), model.docs.cast<double>());
      break;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(result.score)) throw Error(ErrorKind::Numeric, "score is not finite");
  if (dump_dir && transformed) {
    if (transformed->whitening) save_whitening(*transformed->whitening, *dump_dir / model.model_id);
    if (transformed->scaling) save_scaling(*transformed->scaling, *dump_dir / model.model_id);
  }
  return result;
}

}  // namespace

TransferabilityReport score_pool(const std::vector<ModelEmbeddings>& models, const RankingDataset& dataset,
                                 const RunConfig& config, std::ostream* log, const std::optional<fs::path>& dump_dir) {
  if (config.k && *config.k != dataset.candidate_size()) {
    throw Error(ErrorKind::Config, "--k " + std::to_string(*config.k) + " does not match manifest candidate size " +
                                       std::to_string(dataset.candidate_size()));
  }
  if (log != nullptr && (config.method == Method::Rank || config.method == Method::Loglik) &&
      (!config.score.use_whitening || !config.score.use_adaptive_scaling)) {
    *log << "warning: --no-whiten/--no-adascale are ignored for method " << to_string(config.method) << "\n";
  }

  std::vector<ModelResult> results(models.size());
  std::vector<std::optional<Error>> errors(models.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < models.size(); i = next++) {
      try {
        results[i] = score_model(models[i], dataset, config, dump_dir);
      } catch (const Error& e) {
        errors[i] = Error(e.kind(), "model " + models[i].model_id + ": " + e.what());
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(1, models.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& thread : threads) thread.join();
  for (const auto& error : errors) {
    if (error) throw *error;
  }

  TransferabilityReport report;
  report.dataset = config.dataset_name;
  report.k = dataset.candidate_size();
  report.seed = config.seed;
  report.method = to_string(config.method);
  report.config = effective_config(config);
  for (std::size_t i = 0; i < models.size(); ++i) {
    report.entries.push_back({models[i].model_id, results[i].score, config.record_timing ? results[i].seconds : 0.0});
  }
  report.sort_entries();
  report.validate();
  return report;
}

TransferabilityReport cmd_score(const fs::path& pool_dir, const fs::path& manifest, const RunConfig& config,
                                const std::optional<fs::path>& output, std::ostream& log,
                                const std::optional<fs::path>& dump_dir) {
  const auto models = load_pool(pool_dir);
  const auto dataset = load_manifest(manifest, std::max<std::size_t>(RankingDataset::kDefaultMaxCandidateSize,
                                                                     config.k.value_or(0)));
  const auto report = score_pool(models, dataset, config, &log, dump_dir);
  const std::string text = format_report(report);
  if (output) {
    write_file_atomic(*output, text);
  } else {
    log << text;
  }
  log << "top-1: " << report.entries.front().model_id << "\n";
  return report;
}

EvalReport cmd_eval(const fs::path& report_path, const fs::path& truth_path, const std::optional<fs::path>& output,
                    std::ostream& log) {
  if (!fs::exists(report_path)) throw Error(ErrorKind::Io, "cannot open " + report_path.string());
  const auto report = parse_report(read_text_file(report_path));
  const auto truth = load_truth(truth_path);
  const auto eval = evaluate(report, truth);
  const std::string text = format_eval_report(eval);
  if (output) write_file_atomic(*output, text);
  char line[160];
  std::snprintf(line, sizeof line, "tau=%.6f tau_b=%.6f best_model_estimated_rank=%zu M=%zu\n", eval.tau, eval.tau_b,
                eval.best_model_estimated_rank, eval.model_count);
  log << line;
  return eval;
}

std::vector<SweepRow> sweep(const std::vector<ModelEmbeddings>& models, const std::vector<RelevantPair>& pairs,
                            const ModelPoolTruth& truth, const SweepOptions& options, const RunConfig& config,
                            std::ostream* log) {
  if (models.empty()) throw Error(ErrorKind::EmptyInput, "empty model pool");
  if (options.k_min < 2 || options.k_max < options.k_min) {
    throw Error(ErrorKind::Config, "k range must satisfy 2 <= k_min <= k_max");
  }
  const auto doc_pool = static_cast<std::size_t>(models.front().docs.rows());
  std::vector<SweepRow> rows;
  for (std::size_t k = options.k_min; k <= options.k_max; ++k) {
    for (const auto seed : options.seeds) {
      try {
        SamplingOptions sampling;
        sampling.candidate_size = k;
        sampling.seed = seed;
        sampling.query_cap = options.query_cap;
        const auto dataset = sample_candidates(pairs, doc_pool, sampling);
        for (const auto method : options.methods) {
          RunConfig run = config;
          run.method = method;
          run.seed = seed;
          run.k.reset();
          run.record_timing = true;
          const auto report = score_pool(models, dataset, run);
          const auto eval = evaluate(report, truth);
          double seconds = 0.0;
          for (const auto& entry : report.entries) seconds += entry.seconds;
          rows.push_back({k, seed, to_string(method), eval.tau, eval.tau_b, eval.best_model_estimated_rank,
                          seconds / static_cast<double>(report.entries.size())});
          if (log != nullptr) {
            *log << "k=" << k << " seed=" << seed << " method=" << to_string(method) << " tau=" << eval.tau << "\n";
          }
        }
      } catch (const Error& e) {
        rethrow_with_context(e, "k=" + std::to_string(k) + " seed=" + std::to_string(seed));
      }
    }
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "k,seed,method,tau,tau_b,best_rank,mean_seconds\n";
  char line[256];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%zu,%" PRIu64 ",%s,%.6f,%.6f,%zu,%.9f\n", row.k, row.seed, row.method.c_str(),
                  row.tau, row.tau_b, row.best_rank, row.mean_seconds);
    out += line;
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<SweepRow> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream cell_stream(line);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorKind::Format, "sweep csv line " + std::to_string(line_no) + ": 7 columns expected");
    try {
      rows.push_back({std::stoul(cells[0]), std::stoull(cells[1]), cells[2], std::stod(cells[3]), std::stod(cells[4]),
                      std::stoul(cells[5]), std::stod(cells[6])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, "sweep csv line " + std::to_string(line_no) + ": bad number");
    }
  }
  return rows;
}

std::vector<SweepRow> cmd_sweep(const fs::path& pool_dir, const fs::path& pairs_source, const fs::path& truth_path,
                                const SweepOptions& options, const RunConfig& config, const fs::path& output,
                                std::ostream& log) {
  const auto models = load_pool(pool_dir);
  const auto pairs = load_relevant_pairs(pairs_source);
  const auto truth = load_truth(truth_path);
  auto rows = sweep(models, pairs, truth, options, config, &log);
  write_file_atomic(output, format_sweep_csv(rows));
  return rows;
}

void cmd_synth(const fs::path& config_json, const fs::path& out_dir, std::ostream& log) {
  if (!fs::exists(config_json)) throw Error(ErrorKind::Io, "cannot open " + config_json.string());
  const auto config = parse_synth_config(read_text_file(config_json));
  const auto pool = generate_pool(config);
  write_pool(pool, config, out_dir);
  log << "wrote " << pool.models.size() << " models, " << pool.dataset.pair_count() << " pairs to " << out_dir.string()
      << "\n";
}

RankingDataset cmd_sample(const fs::path& pairs_source, std::size_t doc_pool_size, const SamplingOptions& options,
                          const fs::path& output) {
  auto dataset = sample_candidates(load_relevant_pairs(pairs_source), doc_pool_size, options);
  save_manifest(dataset, output);
  return dataset;
}

std::string render_sweep_svg(const std::vector<SweepRow>& rows, bool seconds) {
  // method -> k -> (sum, count)
  std::map<std::string, std::map<std::size_t, std::pair<double, int>>> series;
  for (const auto& row : rows) {
    auto& cell = series[row.method][row.k];
    cell.first += seconds ? row.mean_seconds : row.tau;
    cell.second += 1;
  }
  double k_lo = 1e300, k_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& [method, points] : series) {
    for (const auto& [k, cell] : points) {
      const double y = cell.first / cell.second;
      k_lo = std::min(k_lo, static_cast<double>(k));
      k_hi = std::max(k_hi, static_cast<double>(k));
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (series.empty()) k_lo = k_hi = y_lo = y_hi = 0;
  if (seconds) y_lo = 0;
  if (y_hi <= y_lo) y_hi = y_lo + 1;
  if (k_hi <= k_lo) k_hi = k_lo + 1;

  constexpr double width = 640, height = 400, left = 70, right = 150, top = 30, bottom = 50;
  auto px = [&](double k) { return left + (k - k_lo) / (k_hi - k_lo) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                left, height - bottom, width - right, height - bottom, left, top, left, height - bottom);
  svg << buf;
  for (double k = k_lo; k <= k_hi + 1e-9; k += 1) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%.0f</text>\n",
                  px(k), height - bottom + 18, k);
    svg << buf;
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">%.4g</text>\n",
                  left - 6, py(y) + 4, y);
    svg << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\">candidate size k</text>\n"
                "<text x=\"14\" y=\"%.1f\" font-size=\"13\" transform=\"rotate(-90 14 %.1f)\" "
                "text-anchor=\"middle\">%s</text>\n",
                (left + width - right) / 2, height - 12, height / 2, height / 2,
                seconds ? "mean scoring seconds" : "Kendall tau");
  svg << buf;

  std::size_t color = 0;
  for (const auto& [method, points] : series) {
    const char* stroke = colors[color++ % 4];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [k, cell] : points) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(static_cast<double>(k)), py(cell.first / cell.second));
      svg << buf;
    }
    svg << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                  width - right + 10, top + 16.0 * static_cast<double>(color), stroke, method.c_str());
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

void cmd_plot(const fs::path& sweep_csv, const fs::path& output_prefix, std::ostream& log) {
  if (!fs::exists(sweep_csv)) throw Error(ErrorKind::Io, "cannot open " + sweep_csv.string());
  const auto rows = parse_sweep_csv(read_text_file(sweep_csv));
  auto tau_path = output_prefix;
  tau_path += ".tau.svg";
  auto seconds_path = output_prefix;
  seconds_path += ".seconds.svg";
  write_file_atomic(tau_path, render_sweep_svg(rows, false));
  write_file_atomic(seconds_path, render_sweep_svg(rows, true));
  log << "wrote " << tau_path.string() << " and " << seconds_path.string() << "\n";
}

}  // namespace airtran
