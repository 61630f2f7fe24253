#include "airtran/scoring.hpp"

#include <chrono>
#include <set>
#include <utility>

#include <json.hpp>

#include "airtran/random.hpp"

namespace airtran {

using nlohmann::json;

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double peak = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

double group_log_likelihood(std::span<const double> probabilities, std::size_t relevant_index,
                            LogLikelihoodMode mode) {
  if (relevant_index >= probabilities.size()) throw Error(ErrorKind::Shape, "relevant index out of range");
  if (mode == LogLikelihoodMode::PerRelevant) return std::log(probabilities[relevant_index]);
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    total += std::log10(i == relevant_index ? probabilities[i] : 1.0 - probabilities[i]);
  }
  return total;
}

QualityScore quality_score(const RankingDataset& dataset, const Matrix<double>& queries, const Matrix<double>& docs,
                           const QualityOptions& options, const Vector<double>* weights) {
  const Vector<double> ones = Vector<double>::Ones(queries.cols());
  const Vector<double>& w = weights != nullptr ? *weights : ones;
  detail::check_scoring_inputs(dataset, queries, docs, w.size());

  auto score = [&](const auto& a, const auto& b) { return weighted_score(a, b, w); };

  QualityScore result;
  for (const auto& group : dataset.groups()) {
    result.alignment += score(queries.row(static_cast<Eigen::Index>(group.query_row)),
                              docs.row(static_cast<Eigen::Index>(group.relevant_row)));
  }
  result.alignment /= static_cast<double>(dataset.query_count());

  // Items are (is_doc, row); queries first, each side sorted.
  std::set<RowIndex> query_rows;
  std::set<RowIndex> doc_rows;
  std::set<std::pair<RowIndex, RowIndex>> positives;
  for (const auto& pair : dataset.pairs()) {
    query_rows.insert(pair.query_row);
    doc_rows.insert(pair.doc_row);
    if (pair.label == 1) positives.emplace(pair.query_row, pair.doc_row);
  }
  std::vector<std::pair<bool, RowIndex>> items;
  for (const auto q : query_rows) items.emplace_back(false, q);
  for (const auto d : doc_rows) items.emplace_back(true, d);

  auto row_of = [&](const std::pair<bool, RowIndex>& item) {
    return item.first ? docs.row(static_cast<Eigen::Index>(item.second))
                      : queries.row(static_cast<Eigen::Index>(item.second));
  };
  auto is_positive = [&](const std::pair<bool, RowIndex>& a, const std::pair<bool, RowIndex>& b) {
    if (a.first == b.first) return false;
    const auto& q = a.first ? b : a;
    const auto& d = a.first ? a : b;
    return positives.count({q.second, d.second}) != 0;
  };

  Rng rng(options.seed);
  const std::size_t samples = std::max<std::size_t>(1, options.pairs_per_positive * dataset.pair_count());
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t a = 0;
    std::size_t b = 0;
    do {
      a = static_cast<std::size_t>(rng.below(items.size()));
      b = static_cast<std::size_t>(rng.below(items.size()));
    } while (a == b || is_positive(items[a], items[b]));
    total += score(row_of(items[a]), row_of(items[b]));
  }
  result.uniformity = -total / static_cast<double>(samples);
  result.total = result.alignment + result.uniformity;
  return result;
}

Matrix<double> stack_pair_embeddings(const RankingDataset& dataset, const Matrix<double>& queries,
                                     const Matrix<double>& docs) {
  dataset.check_bounds(static_cast<std::size_t>(queries.rows()), static_cast<std::size_t>(docs.rows()));
  const auto n = static_cast<Eigen::Index>(dataset.pair_count());
  Matrix<double> stacked(2 * n, queries.cols());
  Eigen::Index i = 0;
  for (const auto& pair : dataset.pairs()) {
    stacked.row(i) = queries.row(static_cast<Eigen::Index>(pair.query_row));
    stacked.row(n + i) = docs.row(static_cast<Eigen::Index>(pair.doc_row));
    ++i;
  }
  return stacked;
}

namespace {

void normalize_rows(Matrix<double>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0) m.row(r) /= norm;
  }
}

}  // namespace

TransformedEmbeddings transform_embeddings(const RankingDataset& dataset, const EmbeddingMatrix& raw_queries,
                                           const EmbeddingMatrix& raw_docs, const ScoreConfig& config) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "dataset has no pairs");
  if (raw_queries.cols() != raw_docs.cols()) {
    throw Error(ErrorKind::Shape, "query dim " + std::to_string(raw_queries.cols()) + " != doc dim " +
                                      std::to_string(raw_docs.cols()));
  }
  dataset.check_bounds(static_cast<std::size_t>(raw_queries.rows()), static_cast<std::size_t>(raw_docs.rows()));

  TransformedEmbeddings out;
  out.queries = raw_queries.cast<double>();
  out.docs = raw_docs.cast<double>();

  if (config.use_whitening) {
    try {
      auto model = fit_whitening(stack_pair_embeddings(dataset, out.queries, out.docs), config.epsilon_rel);
      out.queries = apply_whitening(model, out.queries);
      out.docs = apply_whitening(model, out.docs);
      out.whitening = std::move(model);
    } catch (const Error& e) {
      rethrow_with_context(e, "whitening");
    }
  }
  if (config.use_cosine) {
    normalize_rows(out.queries);
    normalize_rows(out.docs);
  }
  if (config.use_adaptive_scaling) {
    try {
      auto scaling = solve_scaling(hadamard_pairs(out.queries, out.docs, dataset), pair_labels<double>(dataset),
                                   config.lambda_rel);
      out.weights = scaling.weights;
      out.scaling = std::move(scaling);
    } catch (const Error& e) {
      rethrow_with_context(e, "adaptive scaling");
    }
  } else {
    out.weights = Vector<double>::Ones(out.queries.cols());
  }
  return out;
}

AirtranResult airtran_score(const RankingDataset& dataset, const EmbeddingMatrix& raw_queries,
                            const EmbeddingMatrix& raw_docs, const ScoreConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  AirtranResult result;
  result.transformed = transform_embeddings(dataset, raw_queries, raw_docs, config);
  try {
    result.score = expected_rank_score(dataset, result.transformed.queries, result.transformed.docs,
                                       result.transformed.weights);
  } catch (const Error& e) {
    rethrow_with_context(e, "expected rank");
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void TransferabilityReport::sort_entries() {
  std::sort(entries.begin(), entries.end(), [](const ReportEntry& a, const ReportEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.model_id < b.model_id;
  });
}

void TransferabilityReport::validate() const {
  std::set<std::string> ids;
  for (const auto& entry : entries) {
    if (!ids.insert(entry.model_id).second) throw Error(ErrorKind::Schema, "duplicate model id " + entry.model_id);
    if (!std::isfinite(entry.score)) throw Error(ErrorKind::Numeric, "non-finite score for " + entry.model_id);
  }
}

std::string format_report(const TransferabilityReport& report) {
  json scores = json::array();
  for (const auto& entry : report.entries) {
    scores.push_back({{"model", entry.model_id}, {"score", entry.score}, {"seconds", entry.seconds}});
  }
  const json config = {{"method", report.method},
                       {"whitening", report.config.use_whitening},
                       {"adaptive_scaling", report.config.use_adaptive_scaling},
                       {"cosine", report.config.use_cosine},
                       {"epsilon_rel", report.config.epsilon_rel},
                       {"lambda_rel", report.config.lambda_rel}};
  const json doc = {{"dataset", report.dataset},
                    {"k", report.k},
                    {"seed", report.seed},
                    {"config", config},
                    {"scores", scores}};
  return doc.dump(2) + "\n";
}

TransferabilityReport parse_report(const std::string& json_text) {
  TransferabilityReport report;
  try {
    const json doc = json::parse(json_text);
    report.dataset = doc.at("dataset").get<std::string>();
    report.k = doc.at("k").get<std::size_t>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("config")) {
      const auto& config = doc.at("config");
      report.method = config.value("method", std::string{});
      report.config.use_whitening = config.value("whitening", true);
      report.config.use_adaptive_scaling = config.value("adaptive_scaling", true);
      report.config.use_cosine = config.value("cosine", false);
      report.config.epsilon_rel = config.value("epsilon_rel", kDefaultEpsilonRel);
      report.config.lambda_rel = config.value("lambda_rel", kDefaultLambdaRel);
    }
    for (const auto& entry : doc.at("scores")) {
      report.entries.push_back(
          {entry.at("model").get<std::string>(), entry.at("score").get<double>(), entry.value("seconds", 0.0)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("report: ") + e.what());
  }
  report.validate();
  return report;
}

}  // namespace airtran
