#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "airtran/error.hpp"
#include "airtran/scoring.hpp"
#include "oracles.hpp"

namespace airtran {
namespace {

RankingDataset manifest(const std::string& text) {
  std::istringstream in(text);
  return read_manifest(in);
}

/// q queries, each with docs [q*k, q*k + k) and the first one relevant.
RankingDataset block_dataset(int queries, int k) {
  std::string text;
  for (int q = 0; q < queries; ++q) {
    for (int j = 0; j < k; ++j) {
      text += "{\"q\":" + std::to_string(q) + ",\"d\":" + std::to_string(q * k + j) + ",\"y\":" +
              (j == 0 ? "1" : "0") + "}\n";
    }
  }
  return manifest(text);
}

std::size_t rank(std::vector<double> scores, std::size_t relevant) {
  return rank_of_relevant(std::span<const double>(scores), relevant);
}

TEST(RankOfRelevant, MotivatingExample) {
  EXPECT_EQ(rank({0.5, 0.45, 0.45}, 0), 1u);
  EXPECT_EQ(rank({0.6, 0.65, 0.1}, 0), 2u);
}

TEST(RankOfRelevant, TiesCountAgainstRelevant) {
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(rank({1, 1, 1, 1, 1}, r), 5u);
  EXPECT_EQ(rank({2, 3, 2}, 2), 3u);
  EXPECT_THROW(rank({1, 2}, 2), Error);
}

TEST(RankOfRelevant, InvariantUnderIncreasingTransform) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(7), mapped(7);
    for (int i = 0; i < 7; ++i) {
      scores[i] = small(gen);
      mapped[i] = std::exp(0.7 * scores[i]) + 4.0;
    }
    const std::size_t r = static_cast<std::size_t>(trial % 7);
    EXPECT_EQ(rank(scores, r), rank(mapped, r));
    EXPECT_EQ(rank(scores, r), oracle::sorted_rank(scores, r));
  }
}

TEST(ExpectedRank, PerfectSeparationScoresOne) {
  const auto dataset = block_dataset(4, 3);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(12, 4);
  for (int i = 0; i < 4; ++i) {
    q(i, i) = 1;
    d(3 * i, i) = 1;
  }
  EXPECT_DOUBLE_EQ(expected_rank_score(dataset, q, d), 1.0);
}

TEST(ExpectedRank, SingleQueryRankTwo) {
  const auto dataset = block_dataset(1, 3);
  Eigen::MatrixXd q(1, 1), d(3, 1);
  q << 1;
  d << 0.5, 0.9, 0.1;
  EXPECT_DOUBLE_EQ(expected_rank_score(dataset, q, d), 0.5);
}

TEST(ExpectedRank, CollapsedEmbeddingsScoreOneOverK) {
  const auto dataset = block_dataset(5, 4);
  EXPECT_DOUBLE_EQ(expected_rank_score(dataset, Eigen::MatrixXd::Ones(5, 3), Eigen::MatrixXd::Ones(20, 3)), 0.25);
}

TEST(ExpectedRank, MatchesSortOracle) {
  std::mt19937_64 gen(2);
  const auto dataset = block_dataset(100, 10);
  const Eigen::MatrixXd q = oracle::gaussian(gen, 100, 8);
  const Eigen::MatrixXd d = oracle::gaussian(gen, 1000, 8);
  double expected = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> scores;
    for (int j = 0; j < 10; ++j) scores.push_back(q.row(i).dot(d.row(i * 10 + j)));
    expected += 1.0 / static_cast<double>(oracle::sorted_rank(scores, 0));
  }
  EXPECT_EQ(expected_rank_score(dataset, q, d), expected / 100);
}

TEST(ExpectedRank, BoundsAndWeightScaleInvariance) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 9;
    const auto dataset = block_dataset(30, k);
    const Eigen::MatrixXd q = oracle::gaussian(gen, 30, 6);
    const Eigen::MatrixXd d = oracle::gaussian(gen, 30 * k, 6);
    const Eigen::VectorXd w = oracle::gaussian(gen, 6, 1);
    const double s = expected_rank_score(dataset, q, d, w);
    EXPECT_GE(s, 1.0 / k);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(expected_rank_score(dataset, q, d, Eigen::VectorXd(w * 4.0)), s);
  }
}

TEST(ExpectedRank, Errors) {
  const auto dataset = block_dataset(2, 2);
  EXPECT_THROW(expected_rank_score(dataset, Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(4, 2)), Error);
  EXPECT_THROW(expected_rank_score(dataset, Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(3, 3)), Error);
  try {
    expected_rank_score(RankingDataset{}, Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(LogLikelihood, PerDocumentModeReproducesMotivatingValues) {
  const std::vector<double> first{0.5, 0.45, 0.45};
  const std::vector<double> second{0.6, 0.65, 0.1};
  EXPECT_NEAR(group_log_likelihood(first, 0, LogLikelihoodMode::PerDocument), -0.82, 0.005);
  EXPECT_NEAR(group_log_likelihood(second, 0, LogLikelihoodMode::PerDocument), -0.72, 0.005);
  EXPECT_NEAR(group_log_likelihood(first, 0, LogLikelihoodMode::PerRelevant), std::log(0.5), 1e-15);
}

TEST(LogLikelihood, UniformScores) {
  const auto dataset = block_dataset(3, 4);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Ones(3, 2);
  const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(12, 2);
  EXPECT_NEAR(log_likelihood_score(dataset, q, d), std::log(0.25), 1e-15);
  EXPECT_NEAR(log_likelihood_score(dataset, q, d, LogLikelihoodMode::PerDocument),
              std::log10(0.25) + 3 * std::log10(0.75), 1e-14);
}

TEST(LogLikelihood, ShiftInvarianceAndOverflowGuard) {
  const std::vector<double> scores{1.0, -2.0, 0.5};
  const std::vector<double> shifted{1001.0, 998.0, 1000.5};
  const auto a = softmax(scores);
  const auto b = softmax(shifted);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  const auto big = softmax(std::vector<double>{1e6, 0.0});
  EXPECT_DOUBLE_EQ(big[0], 1.0);
  EXPECT_DOUBLE_EQ(big[1], 0.0);
}

TEST(QualityScore, IdenticalEmbeddingsCancel) {
  const auto dataset = block_dataset(5, 3);
  const Eigen::RowVector3d v(0.5, -1.0, 2.0);
  const auto score = quality_score(dataset, v.replicate(5, 1), v.replicate(15, 1));
  EXPECT_DOUBLE_EQ(score.alignment, v.squaredNorm());
  EXPECT_DOUBLE_EQ(score.uniformity, -v.squaredNorm());
  EXPECT_DOUBLE_EQ(score.total, 0.0);
  EXPECT_DOUBLE_EQ(quality_score(dataset, Eigen::MatrixXd::Zero(5, 3), Eigen::MatrixXd::Zero(15, 3)).total, 0.0);
}

TEST(QualityScore, OrthonormalFixture) {
  // Query i and its relevant doc are both e_i; every other item gets its own axis.
  const int queries = 4, k = 3;
  const auto dataset = block_dataset(queries, k);
  const int dim = queries + queries * (k - 1);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(queries, dim);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(queries * k, dim);
  int axis = queries;
  for (int i = 0; i < queries; ++i) {
    q(i, i) = 1;
    d(i * k, i) = 1;
    for (int j = 1; j < k; ++j) d(i * k + j, axis++) = 1;
  }
  const auto score = quality_score(dataset, q, d, {.seed = 3});
  EXPECT_DOUBLE_EQ(score.alignment, 1.0);
  EXPECT_DOUBLE_EQ(score.uniformity, 0.0);
  EXPECT_DOUBLE_EQ(score.total, 1.0);
}

TEST(QualityScore, DeterministicGivenSeed) {
  std::mt19937_64 gen(4);
  const auto dataset = block_dataset(20, 5);
  const Eigen::MatrixXd q = oracle::gaussian(gen, 20, 6);
  const Eigen::MatrixXd d = oracle::gaussian(gen, 100, 6);
  const auto a = quality_score(dataset, q, d, {.seed = 11});
  const auto b = quality_score(dataset, q, d, {.seed = 11});
  const auto c = quality_score(dataset, q, d, {.seed = 12});
  EXPECT_EQ(a.total, b.total);
  EXPECT_NE(a.uniformity, c.uniformity);
}

TEST(Pipeline, AllOffEqualsPlainExpectedRank) {
  std::mt19937_64 gen(5);
  const auto dataset = block_dataset(50, 5);
  const EmbeddingMatrix q = oracle::gaussian(gen, 50, 8).cast<float>();
  const EmbeddingMatrix d = oracle::gaussian(gen, 250, 8).cast<float>();
  const auto result = airtran_score(dataset, q, d, {.use_whitening = false, .use_adaptive_scaling = false});
  EXPECT_EQ(result.score, expected_rank_score(dataset, q.cast<double>(), d.cast<double>()));
  EXPECT_GE(result.seconds, 0.0);
  EXPECT_FALSE(result.transformed.whitening.has_value());
}

TEST(Pipeline, StackedRowsFollowManifestOrder) {
  const auto dataset = block_dataset(2, 2);
  Eigen::MatrixXd q(2, 1), d(4, 1);
  q << 10, 20;
  d << 1, 2, 3, 4;
  const Eigen::MatrixXd stacked = stack_pair_embeddings(dataset, q, d);
  EXPECT_EQ(stacked, (Eigen::MatrixXd(8, 1) << 10, 10, 20, 20, 1, 2, 3, 4).finished());
}

TEST(Pipeline, WhiteningToggleOnIsotropicData) {
  // Embeddings already zero-mean and identity-covariance: whitening is a
  // near-rotation, so without scaling the score barely moves.
  std::mt19937_64 gen(6);
  const auto dataset = block_dataset(200, 5);
  Eigen::MatrixXd latent = oracle::gaussian(gen, 200, 8);
  Eigen::MatrixXd d = oracle::gaussian(gen, 1000, 8);
  for (int i = 0; i < 200; ++i) d.row(i * 5) = latent.row(i) + 0.8 * oracle::gaussian(gen, 1, 8);
  const EmbeddingMatrix qf = latent.cast<float>();
  const EmbeddingMatrix df = d.cast<float>();
  const double raw = airtran_score(dataset, qf, df, {.use_whitening = false, .use_adaptive_scaling = false}).score;
  const double white = airtran_score(dataset, qf, df, {.use_whitening = true, .use_adaptive_scaling = false}).score;
  EXPECT_NEAR(raw, white, 0.05);
}

TEST(Pipeline, ScalingHelpsWhenSignalLivesInASubspace) {
  // Only the first 4 of 16 dimensions are shared between a query and its
  // relevant doc; the rest are independent noise. After whitening every
  // dimension has unit variance, so only the scaling weights can tell them apart.
  std::mt19937_64 gen(8);
  const int queries = 300, k = 5;
  const auto dataset = block_dataset(queries, k);
  Eigen::MatrixXd q = oracle::gaussian(gen, queries, 16);
  Eigen::MatrixXd d = oracle::gaussian(gen, queries * k, 16);
  for (int i = 0; i < queries; ++i) {
    d.row(i * k).head(4) = q.row(i).head(4) + 0.5 * oracle::gaussian(gen, 1, 4);
  }
  const EmbeddingMatrix qf = q.cast<float>();
  const EmbeddingMatrix df = d.cast<float>();
  const auto white = airtran_score(dataset, qf, df, {.use_whitening = true, .use_adaptive_scaling = false});
  const auto full = airtran_score(dataset, qf, df, {});
  EXPECT_GT(full.score, white.score + 0.05);
}

TEST(Pipeline, StageErrorsNameTheStage) {
  const auto dataset = block_dataset(1, 2);
  const EmbeddingMatrix q = EmbeddingMatrix::Ones(1, 40);
  const EmbeddingMatrix d = EmbeddingMatrix::Random(2, 40);
  try {
    airtran_score(dataset, q, d, {.use_whitening = false, .use_adaptive_scaling = true, .lambda_rel = 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singularity);
    EXPECT_NE(std::string(e.what()).find("adaptive scaling"), std::string::npos);
  }
}

TEST(Report, JsonRoundTripAndOrdering) {
  TransferabilityReport report;
  report.dataset = "toy";
  report.k = 5;
  report.seed = 9;
  report.method = "airtran";
  report.entries = {{"b", 0.5, 0.1}, {"a", 0.5, 0.2}, {"c", 0.9, 0.3}};
  report.sort_entries();
  EXPECT_EQ(report.entries[0].model_id, "c");
  EXPECT_EQ(report.entries[1].model_id, "a");
  const auto text = format_report(report);
  const auto back = parse_report(text);
  EXPECT_EQ(format_report(back), text);
  EXPECT_NE(text.find("\"scores\""), std::string::npos);
}

}  // namespace
}  // namespace airtran
