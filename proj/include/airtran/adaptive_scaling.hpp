#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "airtran/dataset.hpp"
#include "airtran/error.hpp"
#include "airtran/matrix.hpp"

namespace airtran {

enum class SolvePath { Cholesky, Eigen };

/// Per-dimension weights w (the squared scaling factors) fit by ridge
/// least squares. Entries may be negative; they are used as-is.
template <typename Scalar>
struct ScalingWeights {
  Vector<Scalar> weights;
  Scalar lambda_used = 0;
  Scalar residual_norm = 0;
  SolvePath path = SolvePath::Cholesky;
};

inline constexpr double kDefaultLambdaRel = 1e-6;

/// Row i is the elementwise product of pair i's query row and doc row, in
/// manifest order.
template <typename QueryDerived, typename DocDerived>
Matrix<typename QueryDerived::Scalar> hadamard_pairs(const Eigen::MatrixBase<QueryDerived>& queries,
                                                     const Eigen::MatrixBase<DocDerived>& docs,
                                                     const RankingDataset& dataset) {
  using Scalar = typename QueryDerived::Scalar;
  if (queries.cols() != docs.cols()) {
    throw Error(ErrorKind::Shape, "query dim " + std::to_string(queries.cols()) + " != doc dim " +
                                      std::to_string(docs.cols()));
  }
  dataset.check_bounds(static_cast<std::size_t>(queries.rows()), static_cast<std::size_t>(docs.rows()));
  Matrix<Scalar> features(static_cast<Eigen::Index>(dataset.pair_count()), queries.cols());
  Eigen::Index i = 0;
  for (const auto& pair : dataset.pairs()) {
    features.row(i++) = queries.row(static_cast<Eigen::Index>(pair.query_row))
                            .cwiseProduct(docs.row(static_cast<Eigen::Index>(pair.doc_row)).template cast<Scalar>());
  }
  return features;
}

/// Labels of the dataset's pairs in manifest order.
template <typename Scalar>
Vector<Scalar> pair_labels(const RankingDataset& dataset) {
  Vector<Scalar> labels(static_cast<Eigen::Index>(dataset.pair_count()));
  Eigen::Index i = 0;
  for (const auto& pair : dataset.pairs()) labels(i++) = static_cast<Scalar>(pair.label);
  return labels;
}

/// ||F w - y||^2 + lambda ||w||^2
template <typename Scalar>
Scalar scaling_loss(const Matrix<Scalar>& features, const Vector<Scalar>& labels, const Vector<Scalar>& weights,
                    Scalar lambda) {
  return (features * weights - labels).squaredNorm() + lambda * weights.squaredNorm();
}

/// 2 F^T F w - 2 F^T y + 2 lambda w
template <typename Scalar>
Vector<Scalar> scaling_gradient(const Matrix<Scalar>& features, const Vector<Scalar>& labels,
                                const Vector<Scalar>& weights, Scalar lambda) {
  return 2 * features.transpose() * (features * weights - labels) + 2 * lambda * weights;
}

/// Solves (F^T F + lambda I) w = F^T y with lambda = lambda_rel * trace(F^T F) / D.
///
/// Cholesky first; if the factorization fails the system is solved through a
/// symmetric eigendecomposition instead. With lambda == 0 a Gram matrix that is
/// singular to working precision is reported rather than solved.
template <typename Scalar>
ScalingWeights<Scalar> solve_scaling(const Matrix<Scalar>& features, const Vector<Scalar>& labels,
                                     Scalar lambda_rel = static_cast<Scalar>(kDefaultLambdaRel)) {
  if (features.rows() < 1) throw Error(ErrorKind::EmptyInput, "no pairs to fit scaling weights on");
  if (features.rows() != labels.size()) {
    throw Error(ErrorKind::Shape, std::to_string(features.rows()) + " feature rows vs " +
                                      std::to_string(labels.size()) + " labels");
  }
  if (!(lambda_rel >= 0)) throw Error(ErrorKind::Config, "lambda_rel must be non-negative");
  const Eigen::Index dim = features.cols();

  Matrix<Scalar> gram = Matrix<Scalar>::Zero(dim, dim);
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(features.transpose());
  gram = gram.template selfadjointView<Eigen::Lower>();
  const Vector<Scalar> rhs = features.transpose() * labels;
  if (!gram.allFinite() || !rhs.allFinite()) throw Error(ErrorKind::Numeric, "non-finite Gram matrix");

  ScalingWeights<Scalar> result;
  const Scalar trace = gram.trace();
  result.lambda_used = lambda_rel == 0 ? Scalar(0) : (trace > 0 ? lambda_rel * trace / static_cast<Scalar>(dim)
                                                                : lambda_rel);
  gram.diagonal().array() += result.lambda_used;

  const Scalar singular_tol = static_cast<Scalar>(dim) * Eigen::NumTraits<Scalar>::epsilon();
  Eigen::LLT<Matrix<Scalar>> llt(gram);
  const bool llt_ok = llt.info() == Eigen::Success && (result.lambda_used > 0 || llt.rcond() > singular_tol);
  if (llt_ok) {
    result.weights = llt.solve(rhs);
    result.path = SolvePath::Cholesky;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::Numeric, "eigendecomposition of Gram matrix failed");
    const Vector<Scalar>& values = eig.eigenvalues();
    const Scalar largest = values.cwiseAbs().maxCoeff();
    if (result.lambda_used == 0 && values.minCoeff() <= singular_tol * largest) {
      throw Error(ErrorKind::Singularity, "Gram matrix is singular to working precision; use lambda_rel > 0");
    }
    Vector<Scalar> inverse = values.unaryExpr([&](Scalar v) { return v > singular_tol * largest ? 1 / v : Scalar(0); });
    result.weights = eig.eigenvectors() * inverse.asDiagonal() * eig.eigenvectors().transpose() * rhs;
    result.path = SolvePath::Eigen;
  }
  if (!result.weights.allFinite()) throw Error(ErrorKind::Numeric, "scaling weights are not finite");
  result.residual_norm = (features * result.weights - labels).norm();
  return result;
}

/// sum_k w_k q_k d_k; the dot product of the scaled embeddings when w >= 0.
template <typename QDerived, typename DDerived, typename WDerived>
typename QDerived::Scalar weighted_score(const Eigen::MatrixBase<QDerived>& query, const Eigen::MatrixBase<DDerived>& doc,
                                         const Eigen::MatrixBase<WDerived>& weights) {
  if (query.size() != doc.size() || query.size() != weights.size()) {
    throw Error(ErrorKind::Shape, "weighted_score operands differ in length");
  }
  return (query.reshaped().array() * doc.reshaped().array() * weights.reshaped().array()).sum();
}

/// Writes <prefix>.weights.mat (1xD) and <prefix>.weights.json {lambda_used, residual_norm}.
void save_scaling(const ScalingWeights<double>& weights, const std::filesystem::path& prefix);
ScalingWeights<double> load_scaling(const std::filesystem::path& prefix);

}  // namespace airtran
