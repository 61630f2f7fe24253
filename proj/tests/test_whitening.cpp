#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "airtran/error.hpp"
#include "airtran/whitening.hpp"
#include "oracles.hpp"

namespace airtran {
namespace {

Eigen::MatrixXd correlated_data(std::uint64_t seed, Eigen::Index rows, Eigen::Index dim, double condition) {
  std::mt19937_64 gen(seed);
  const Eigen::MatrixXd cov = oracle::random_spd(gen, dim, condition);
  const Eigen::MatrixXd root = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  Eigen::MatrixXd data = oracle::gaussian(gen, rows, dim) * root.transpose();
  data.rowwise() += Eigen::RowVectorXd::LinSpaced(dim, -3.0, 5.0);
  return data;
}

TEST(Whitening, DiagonalCovarianceIsAnalytic) {
  const double x = std::sqrt(6.0), y = std::sqrt(1.5);
  Eigen::MatrixXd data(4, 2);
  data << x, 0, -x, 0, 0, y, 0, -y;
  const auto model = fit_whitening(data, 1e-12);
  EXPECT_NEAR(model.mean(0), 0.0, 1e-15);
  EXPECT_NEAR(model.mean(1), 0.0, 1e-15);
  EXPECT_NEAR(model.eigenvalues(0), 4.0, 1e-9);
  EXPECT_NEAR(model.eigenvalues(1), 1.0, 1e-9);
  EXPECT_TRUE(model.transform.isApprox((Eigen::Matrix2d() << 0.5, 0, 0, 1).finished(), 1e-9));

  Eigen::MatrixXd row(1, 2);
  row << 2, 1;
  const Eigen::MatrixXd out = apply_whitening(model, row);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(out(0, 1), 1.0, 1e-9);
}

TEST(Whitening, ConstantInputFallsBackToJitter) {
  Eigen::MatrixXd data = Eigen::RowVector3d(1.5, -2.0, 4.0).replicate(10, 1);
  const double eps_rel = 1e-4;
  const auto model = fit_whitening(data, eps_rel);
  EXPECT_TRUE(model.mean.isApprox(Eigen::RowVector3d(1.5, -2.0, 4.0)));
  EXPECT_DOUBLE_EQ(model.epsilon_used, eps_rel);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(model.eigenvalues(i), eps_rel);
  EXPECT_TRUE(model.transform.isApprox(Eigen::Matrix3d::Identity() / std::sqrt(eps_rel), 1e-12));
  EXPECT_TRUE(apply_whitening(model, data).isZero(0));
}

TEST(Whitening, EigendecompositionReconstructsDirectCovariance) {
  const Eigen::MatrixXd data = correlated_data(1, 400, 16, 100.0);
  const auto model = fit_whitening(data, 1e-6);
  // Direct covariance oracle.
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd sigma = centered.transpose() * centered / 399.0;
  EXPECT_NEAR(model.epsilon_used, 1e-6 * sigma.trace() / 16, 1e-18);
  sigma.diagonal().array() += model.epsilon_used;

  const Eigen::MatrixXd rebuilt = model.eigenvectors * model.eigenvalues.asDiagonal() * model.eigenvectors.transpose();
  EXPECT_LE((rebuilt - sigma).norm(), 1e-6);
  EXPECT_LE((rebuilt - sigma).norm() / sigma.norm(), 1e-6);
  EXPECT_TRUE(model.transform.isApprox(model.eigenvectors * model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal()));
}

TEST(Whitening, OrderingAndSignConvention) {
  const auto model = fit_whitening(correlated_data(2, 300, 12, 50.0), 1e-6);
  for (Eigen::Index j = 0; j < model.dim(); ++j) {
    if (j > 0) EXPECT_GE(model.eigenvalues(j - 1), model.eigenvalues(j));
    EXPECT_GE(model.eigenvalues(j), model.epsilon_used);
    Eigen::Index arg = 0;
    model.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(model.eigenvectors(arg, j), 0.0);
  }
}

TEST(Whitening, WhitenedFittingDataHasIdentityCovariance) {
  const Eigen::MatrixXd data = correlated_data(3, 500, 32, 1e3);
  const auto model = fit_whitening(data, 1e-6);
  const Eigen::MatrixXd white = apply_whitening(model, data);
  EXPECT_EQ(white.cols(), 32);
  EXPECT_LE((sample_covariance(white) - Eigen::MatrixXd::Identity(32, 32)).norm(), 1e-3);
  EXPECT_LE(white.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
}

// Property: identity covariance holds up to condition number 1e6.
TEST(Whitening, IdentityCovariancePropertyAcrossConditioning) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const double condition = std::pow(10.0, static_cast<double>(seed));
    const Eigen::MatrixXd data = correlated_data(100 + seed, 600, 16, condition);
    const auto model = fit_whitening(data, 1e-6);
    const Eigen::MatrixXd white = apply_whitening(model, data);
    const double bound = std::max(1e-3, 10 * model.epsilon_used * std::sqrt(16.0));
    EXPECT_LE((sample_covariance(white) - Eigen::MatrixXd::Identity(16, 16)).norm(), bound) << condition;
  }
}

TEST(Whitening, RowPermutationInvariance) {
  Eigen::MatrixXd data = correlated_data(4, 700, 10, 10.0);
  const auto a = fit_whitening(data, 1e-6);
  std::mt19937_64 gen(9);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(data.rows());
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + perm.indices().size(), gen);
  const auto b = fit_whitening(Eigen::MatrixXd(perm * data), 1e-6);
  EXPECT_LE((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((a.transform - b.transform).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Whitening, MeanRowsMapToZero) {
  const Eigen::MatrixXd data = correlated_data(5, 50, 6, 5.0);
  const auto model = fit_whitening(data, 1e-6);
  const Eigen::MatrixXd means = model.mean.replicate(3, 1);
  EXPECT_LE(apply_whitening(model, means).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Whitening, FloatInputIsAccepted) {
  const Eigen::MatrixXf data = correlated_data(6, 200, 8, 10.0).cast<float>();
  const auto model = fit_whitening(data.cast<double>().eval(), 1e-6);
  const Eigen::MatrixXd white = apply_whitening(model, data);
  EXPECT_LE((sample_covariance(white) - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-3);
}

TEST(Whitening, Errors) {
  try {
    fit_whitening(Eigen::MatrixXd::Ones(1, 3), 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
  const auto model = fit_whitening(correlated_data(7, 20, 4, 2.0), 1e-6);
  try {
    apply_whitening(model, Eigen::MatrixXd::Ones(2, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  try {
    fit_whitening(bad, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Whitening, SerializationRoundTrip) {
  const auto model = fit_whitening(correlated_data(8, 100, 5, 3.0), 1e-6);
  const auto dir = std::filesystem::temp_directory_path() / "airtran_whitening_test";
  std::filesystem::create_directories(dir);
  save_whitening(model, dir / "m");
  const auto back = load_whitening(dir / "m");
  EXPECT_TRUE(back.mean.isApprox(model.mean, 1e-6));
  EXPECT_TRUE(back.transform.isApprox(model.transform, 1e-6));
  EXPECT_EQ(back.eigenvalues, model.eigenvalues);
  EXPECT_EQ(back.epsilon_used, model.epsilon_used);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace airtran
