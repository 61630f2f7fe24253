#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "airtran/adaptive_scaling.hpp"
#include "airtran/dataset.hpp"
#include "airtran/error.hpp"
#include "airtran/matrix.hpp"
#include "airtran/whitening.hpp"

namespace airtran {

/// 1 + number of other candidates scoring >= the relevant one. Ties go
/// against the relevant document.
template <typename Scalar>
std::size_t rank_of_relevant(std::span<const Scalar> candidate_scores, std::size_t relevant_index) {
  if (relevant_index >= candidate_scores.size()) {
    throw Error(ErrorKind::Shape, "relevant index " + std::to_string(relevant_index) + " outside " +
                                      std::to_string(candidate_scores.size()) + " candidates");
  }
  const Scalar target = candidate_scores[relevant_index];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < candidate_scores.size(); ++j) {
    if (j != relevant_index && candidate_scores[j] >= target) ++rank;
  }
  return rank;
}

/// Scores of a group's candidates against its query: relevant first, then
/// irrelevants in manifest order.
template <typename QDerived, typename DDerived, typename WDerived>
std::vector<typename QDerived::Scalar> group_scores(const CandidateGroup& group,
                                                    const Eigen::MatrixBase<QDerived>& queries,
                                                    const Eigen::MatrixBase<DDerived>& docs,
                                                    const Eigen::MatrixBase<WDerived>& weights) {
  using Scalar = typename QDerived::Scalar;
  const RowVector<Scalar> scaled_query =
      queries.row(static_cast<Eigen::Index>(group.query_row)).cwiseProduct(weights.reshaped().transpose());
  std::vector<Scalar> scores;
  scores.reserve(group.size());
  scores.push_back(scaled_query.dot(docs.row(static_cast<Eigen::Index>(group.relevant_row))));
  for (const RowIndex doc : group.irrelevant_rows) {
    scores.push_back(scaled_query.dot(docs.row(static_cast<Eigen::Index>(doc))));
  }
  return scores;
}

namespace detail {

template <typename QDerived, typename DDerived>
void check_scoring_inputs(const RankingDataset& dataset, const Eigen::MatrixBase<QDerived>& queries,
                          const Eigen::MatrixBase<DDerived>& docs, Eigen::Index weight_size) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "dataset has no pairs");
  if (queries.cols() != docs.cols() || weight_size != queries.cols()) {
    throw Error(ErrorKind::Shape, "dimension mismatch: queries " + std::to_string(queries.cols()) + ", docs " +
                                      std::to_string(docs.cols()) + ", weights " + std::to_string(weight_size));
  }
  dataset.check_bounds(static_cast<std::size_t>(queries.rows()), static_cast<std::size_t>(docs.rows()));
}

}  // namespace detail

/// Mean reciprocal rank of each query's relevant document within its
/// candidate group, under the weighted dot-product score.
template <typename QDerived, typename DDerived, typename WDerived>
double expected_rank_score(const RankingDataset& dataset, const Eigen::MatrixBase<QDerived>& queries,
                           const Eigen::MatrixBase<DDerived>& docs, const Eigen::MatrixBase<WDerived>& weights) {
  detail::check_scoring_inputs(dataset, queries, docs, weights.size());
  using Scalar = typename QDerived::Scalar;
  double total = 0.0;
  for (const auto& group : dataset.groups()) {
    const auto scores = group_scores(group, queries, docs, weights);
    total += 1.0 / static_cast<double>(rank_of_relevant(std::span<const Scalar>(scores), 0));
  }
  return total / static_cast<double>(dataset.query_count());
}

template <typename QDerived, typename DDerived>
double expected_rank_score(const RankingDataset& dataset, const Eigen::MatrixBase<QDerived>& queries,
                           const Eigen::MatrixBase<DDerived>& docs) {
  return expected_rank_score(dataset, queries, docs, Vector<typename QDerived::Scalar>::Ones(queries.cols()));
}

enum class LogLikelihoodMode {
  /// ln p(d+) under the group softmax.
  PerRelevant,
  /// Bernoulli log-likelihood of every document's label, summed over the
  /// group in base 10: log10 p for the relevant, log10(1 - p) for the rest.
  PerDocument,
};

/// Log-likelihood of one group given per-document matching probabilities.
double group_log_likelihood(std::span<const double> probabilities, std::size_t relevant_index,
                            LogLikelihoodMode mode);

/// Softmax over scores with max subtraction.
std::vector<double> softmax(std::span<const double> scores);

template <typename QDerived, typename DDerived>
double log_likelihood_score(const RankingDataset& dataset, const Eigen::MatrixBase<QDerived>& queries,
                            const Eigen::MatrixBase<DDerived>& docs,
                            LogLikelihoodMode mode = LogLikelihoodMode::PerRelevant) {
  const Vector<typename QDerived::Scalar> ones = Vector<typename QDerived::Scalar>::Ones(queries.cols());
  detail::check_scoring_inputs(dataset, queries, docs, ones.size());
  double total = 0.0;
  for (const auto& group : dataset.groups()) {
    const auto raw = group_scores(group, queries, docs, ones);
    const std::vector<double> scores(raw.begin(), raw.end());
    const auto probabilities = softmax(scores);
    total += group_log_likelihood(probabilities, 0, mode);
  }
  return total / static_cast<double>(dataset.query_count());
}

struct QualityOptions {
  std::uint64_t seed = 0;
  std::size_t pairs_per_positive = 10;  ///< uniformity sample size = this * N
};

struct QualityScore {
  double alignment = 0.0;
  double uniformity = 0.0;
  double total = 0.0;
};

/// Alignment (mean positive-pair score) plus uniformity (negated mean score
/// of random distinct item pairs drawn from the dataset's queries and docs,
/// excluding labeled positives). Optional weights apply the weighted score.
QualityScore quality_score(const RankingDataset& dataset, const Matrix<double>& queries, const Matrix<double>& docs,
                           const QualityOptions& options = {}, const Vector<double>* weights = nullptr);

struct ScoreConfig {
  bool use_whitening = true;
  bool use_adaptive_scaling = true;
  bool use_cosine = false;
  double epsilon_rel = kDefaultEpsilonRel;
  double lambda_rel = kDefaultLambdaRel;
};

/// Embeddings after the whitening/scaling stages, ready for any scorer.
struct TransformedEmbeddings {
  Matrix<double> queries;
  Matrix<double> docs;
  Vector<double> weights;
  std::optional<WhiteningModel<double>> whitening;
  std::optional<ScalingWeights<double>> scaling;
};

/// Stacks the query and document rows of every pair (2N rows) in manifest order.
Matrix<double> stack_pair_embeddings(const RankingDataset& dataset, const Matrix<double>& queries,
                                     const Matrix<double>& docs);

/// Whitening fit on the stacked 2N rows and applied to both matrices, then
/// scaling weights solved on all N labeled pairs. Stage failures are
/// re-thrown prefixed with the stage name.
TransformedEmbeddings transform_embeddings(const RankingDataset& dataset, const EmbeddingMatrix& raw_queries,
                                           const EmbeddingMatrix& raw_docs, const ScoreConfig& config);

struct AirtranResult {
  double score = 0.0;
  double seconds = 0.0;
  TransformedEmbeddings transformed;
};

/// Full pipeline: transform_embeddings followed by expected_rank_score.
/// `seconds` is monotonic wall time of both steps; loading is not included.
AirtranResult airtran_score(const RankingDataset& dataset, const EmbeddingMatrix& raw_queries,
                            const EmbeddingMatrix& raw_docs, const ScoreConfig& config);

struct ReportEntry {
  std::string model_id;
  double score = 0.0;
  double seconds = 0.0;
};

/// Scores for a model pool, kept sorted by descending score then model id.
struct TransferabilityReport {
  std::string dataset;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string method;
  ScoreConfig config;
  std::vector<ReportEntry> entries;

  void sort_entries();
  void validate() const;
};

std::string format_report(const TransferabilityReport& report);
TransferabilityReport parse_report(const std::string& json_text);

}  // namespace airtran
