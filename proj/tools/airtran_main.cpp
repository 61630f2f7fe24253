#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "airtran/commands.hpp"

namespace {

struct ScoreFlags {
  std::string method = "airtran";
  std::size_t k = 0;
  std::optional<std::uint64_t> seed;
  double epsilon_rel = airtran::kDefaultEpsilonRel;
  double lambda_rel = airtran::kDefaultLambdaRel;
  bool no_whiten = false;
  bool no_adascale = false;
  bool cosine = false;
  std::size_t jobs = 1;
};

void add_score_flags(CLI::App* cmd, ScoreFlags& flags) {
  cmd->add_option("--method", flags.method, "airtran | rank | qtran | loglik")->capture_default_str();
  cmd->add_option("--k", flags.k, "candidate size (checked against the manifest)");
  cmd->add_option("--seed", flags.seed, "seed; falls back to $AIRTRAN_SEED, then 0");
  cmd->add_option("--epsilon-rel", flags.epsilon_rel, "whitening jitter relative to trace/D")->capture_default_str();
  cmd->add_option("--lambda-rel", flags.lambda_rel, "ridge strength relative to trace/D")->capture_default_str();
  cmd->add_flag("--no-whiten", flags.no_whiten, "skip whitening");
  cmd->add_flag("--no-adascale", flags.no_adascale, "skip adaptive scaling");
  cmd->add_flag("--cosine", flags.cosine, "cosine instead of dot-product matching");
  cmd->add_option("--jobs", flags.jobs, "models scored concurrently")->capture_default_str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("AIRTRAN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw airtran::Error(airtran::ErrorKind::Config, "AIRTRAN_SEED is not an unsigned integer");
    }
  }
  return 0;
}

airtran::RunConfig to_run_config(const ScoreFlags& flags) {
  airtran::RunConfig config;
  config.method = airtran::parse_method(flags.method);
  if (flags.k != 0) config.k = flags.k;
  config.seed = resolve_seed(flags.seed);
  config.score.use_whitening = !flags.no_whiten;
  config.score.use_adaptive_scaling = !flags.no_adascale;
  config.score.use_cosine = flags.cosine;
  config.score.epsilon_rel = flags.epsilon_rel;
  config.score.lambda_rel = flags.lambda_rel;
  config.jobs = flags.jobs;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transferability estimation for text-ranking model selection"};
  app.require_subcommand(1);

  ScoreFlags score_flags;
  std::string pool_dir;
  std::string manifest;
  std::string output;
  std::string dump_dir;
  std::string dataset_name = "dataset";
  bool no_timing = false;
  auto* score = app.add_subcommand("score", "score every model in a pool directory");
  score->add_option("--pool", pool_dir, "pool directory (<model>/queries.mat, docs.mat)")->required();
  score->add_option("--manifest", manifest, "JSON-lines candidate manifest")->required();
  score->add_option("--output", output, "report JSON path (stdout if omitted)");
  score->add_option("--dataset", dataset_name, "dataset name recorded in the report");
  score->add_option("--dump-transforms", dump_dir, "write per-model whitening/scaling files here");
  score->add_flag("--no-timing", no_timing, "record seconds as 0 for byte-reproducible reports");
  add_score_flags(score, score_flags);

  std::string report_path;
  std::string truth_path;
  auto* eval = app.add_subcommand("eval", "correlate a report with ground truth");
  eval->add_option("--report", report_path)->required();
  eval->add_option("--truth", truth_path)->required();
  eval->add_option("--output", output, "EvalReport JSON path");

  std::string config_path;
  std::string out_dir;
  auto* synth = app.add_subcommand("synth", "generate a synthetic model pool");
  synth->add_option("--config", config_path, "SynthConfig JSON")->required();
  synth->add_option("--out", out_dir, "output pool directory")->required();

  std::string pairs_path;
  std::size_t doc_pool_size = 0;
  airtran::SamplingOptions sampling;
  std::optional<std::uint64_t> sample_seed;
  auto* sample = app.add_subcommand("sample", "sample candidate groups into a manifest");
  sample->add_option("--pairs", pairs_path, "JSON-lines relevant pairs {\"q\",\"d\"}")->required();
  sample->add_option("--doc-pool-size", doc_pool_size, "number of rows in the document matrix")->required();
  sample->add_option("--k", sampling.candidate_size)->capture_default_str();
  sample->add_option("--seed", sample_seed);
  sample->add_option("--query-cap", sampling.query_cap, "0 disables the cap")->capture_default_str();
  sample->add_option("--output", output)->required();

  ScoreFlags sweep_flags;
  airtran::SweepOptions sweep_options;
  std::vector<std::string> methods;
  std::string k_range = "2..10";
  auto* sweep = app.add_subcommand("sweep", "sweep candidate sizes and seeds, emit CSV");
  sweep->add_option("--pool", pool_dir)->required();
  sweep->add_option("--pairs", pairs_path, "relevant pairs source")->required();
  sweep->add_option("--truth", truth_path, "truth JSON (default <pool>/truth.json)");
  sweep->add_option("--k-range", k_range, "inclusive range lo..hi")->capture_default_str();
  sweep->add_option("--seeds", sweep_options.seeds, "seed list")->delimiter(',');
  sweep->add_option("--methods", methods, "methods to compare")->delimiter(',');
  sweep->add_option("--query-cap", sweep_options.query_cap)->capture_default_str();
  sweep->add_option("--output", output, "CSV path")->required();
  add_score_flags(sweep, sweep_flags);

  std::string csv_path;
  std::string prefix;
  auto* plot = app.add_subcommand("plot", "render sweep CSV as SVG line charts");
  plot->add_option("--input", csv_path)->required();
  plot->add_option("--output-prefix", prefix)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) {
      auto config = to_run_config(score_flags);
      config.record_timing = !no_timing;
      config.dataset_name = dataset_name;
      airtran::cmd_score(pool_dir, manifest, config, output.empty() ? std::nullopt : std::optional<std::string>(output),
                         std::cerr, dump_dir.empty() ? std::nullopt : std::optional<std::string>(dump_dir));
    } else if (eval->parsed()) {
      airtran::cmd_eval(report_path, truth_path, output.empty() ? std::nullopt : std::optional<std::string>(output),
                        std::cout);
    } else if (synth->parsed()) {
      airtran::cmd_synth(config_path, out_dir, std::cerr);
    } else if (sample->parsed()) {
      sampling.seed = resolve_seed(sample_seed);
      const auto dataset = airtran::cmd_sample(pairs_path, doc_pool_size, sampling, output);
      std::cerr << "queries=" << dataset.query_count() << " pairs=" << dataset.pair_count() << "\n";
    } else if (sweep->parsed()) {
      const auto sep = k_range.find("..");
      if (sep == std::string::npos) throw airtran::Error(airtran::ErrorKind::Config, "--k-range must be lo..hi");
      try {
        sweep_options.k_min = std::stoul(k_range.substr(0, sep));
        sweep_options.k_max = std::stoul(k_range.substr(sep + 2));
      } catch (const std::exception&) {
        throw airtran::Error(airtran::ErrorKind::Config, "--k-range must be lo..hi");
      }
      if (!methods.empty()) {
        sweep_options.methods.clear();
        for (const auto& m : methods) sweep_options.methods.push_back(airtran::parse_method(m));
      }
      if (truth_path.empty()) truth_path = (std::filesystem::path(pool_dir) / "truth.json").string();
      const auto config = to_run_config(sweep_flags);
      airtran::cmd_sweep(pool_dir, pairs_path, truth_path, sweep_options, config, output, std::cerr);
    } else if (plot->parsed()) {
      airtran::cmd_plot(csv_path, prefix, std::cerr);
    }
  } catch (const airtran::Error& e) {
    std::cerr << "airtran: " << e.what() << "\n";
    return airtran::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "airtran: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
