#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "airtran/error.hpp"
#include "airtran/matrix.hpp"

namespace airtran {

/// Affine map x -> (x - mean) * transform that sends the fitting data to
/// (approximately) identity covariance. transform = U * Lambda^(-1/2) with
/// eigenvalues in descending order.
template <typename Scalar>
struct WhiteningModel {
  RowVector<Scalar> mean;
  Matrix<Scalar> transform;
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  Scalar epsilon_used = 0;

  Eigen::Index dim() const noexcept { return mean.size(); }
};

inline constexpr double kDefaultEpsilonRel = 1e-6;

namespace detail {

/// Column means with Kahan-compensated accumulation.
template <typename Derived>
RowVector<typename Derived::Scalar> compensated_column_mean(const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index cols = data.cols();
  RowVector<Scalar> sum = RowVector<Scalar>::Zero(cols);
  RowVector<Scalar> carry = RowVector<Scalar>::Zero(cols);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Scalar y = data(r, c) - carry(c);
      const Scalar t = sum(c) + y;
      carry(c) = (t - sum(c)) - y;
      sum(c) = t;
    }
  }
  return sum / static_cast<Scalar>(data.rows());
}

/// (X - 1 mean)^T (X - 1 mean), summed over fixed row blocks whose partial
/// Gram matrices are combined with Kahan compensation.
template <typename Derived>
Matrix<typename Derived::Scalar> centered_gram(const Eigen::MatrixBase<Derived>& data,
                                                const RowVector<typename Derived::Scalar>& mean) {
  using Scalar = typename Derived::Scalar;
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index dim = data.cols();
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(dim, dim);
  Matrix<Scalar> carry = Matrix<Scalar>::Zero(dim, dim);
  for (Eigen::Index start = 0; start < data.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, data.rows() - start);
    const Matrix<Scalar> centered = data.middleRows(start, len).rowwise() - mean;
    Matrix<Scalar> partial = Matrix<Scalar>::Zero(dim, dim);
    partial.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    const Matrix<Scalar> y = partial.template triangularView<Eigen::Lower>().toDenseMatrix() - carry;
    const Matrix<Scalar> t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  Matrix<Scalar> gram = sum.template selfadjointView<Eigen::Lower>();
  return gram;
}

}  // namespace detail

/// Fits whitening on the stacked query+document embeddings.
///
/// Sigma = centered Gram / (rows - 1) + eps * I, with eps = epsilon_rel * trace(Sigma0) / D.
/// When the unjittered covariance is exactly zero (constant input) eps falls back to
/// epsilon_rel itself. Eigenvectors are ordered by descending eigenvalue and signed so
/// their largest-magnitude entry is positive.
template <typename Derived>
WhiteningModel<typename Derived::Scalar> fit_whitening(const Eigen::MatrixBase<Derived>& stacked,
                                                       typename Derived::Scalar epsilon_rel = kDefaultEpsilonRel) {
  using Scalar = typename Derived::Scalar;
  if (stacked.rows() < 2) {
    throw Error(ErrorKind::DegenerateInput,
                "whitening needs at least 2 rows, got " + std::to_string(stacked.rows()));
  }
  if (!(epsilon_rel > 0)) throw Error(ErrorKind::Config, "epsilon_rel must be positive");
  const Eigen::Index dim = stacked.cols();

  WhiteningModel<Scalar> model;
  model.mean = detail::compensated_column_mean(stacked);
  Matrix<Scalar> covariance = detail::centered_gram(stacked, model.mean) / static_cast<Scalar>(stacked.rows() - 1);
  if (!covariance.allFinite()) throw Error(ErrorKind::Data, "covariance has non-finite entries");

  const Scalar trace = covariance.trace();
  model.epsilon_used = trace > 0 ? epsilon_rel * trace / static_cast<Scalar>(dim) : epsilon_rel;
  covariance.diagonal().array() += model.epsilon_used;

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(covariance);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::Numeric, "eigendecomposition did not converge");

  Matrix<Scalar> vectors = solver.eigenvectors();
  Vector<Scalar> values = solver.eigenvalues();
  std::vector<Eigen::Index> peak(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) = -vectors.col(j);
    peak[static_cast<std::size_t>(j)] = arg;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values(a) != values(b)) return values(a) > values(b);
    return peak[static_cast<std::size_t>(a)] < peak[static_cast<std::size_t>(b)];
  });

  model.eigenvalues.resize(dim);
  model.eigenvectors.resize(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    // Sigma0 is PSD, so anything under eps is round-off.
    model.eigenvalues(j) = std::max(values(src), model.epsilon_used);
    model.eigenvectors.col(j) = vectors.col(src);
  }
  model.transform = model.eigenvectors * model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  return model;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> apply_whitening(const WhiteningModel<Scalar>& model, const Eigen::MatrixBase<Derived>& matrix) {
  if (matrix.cols() != model.dim()) {
    throw Error(ErrorKind::Shape, "whitening model has dim " + std::to_string(model.dim()) + ", input has " +
                                      std::to_string(matrix.cols()));
  }
  return (matrix.template cast<Scalar>().rowwise() - model.mean) * model.transform;
}

/// Sample covariance with the (rows - 1) divisor; shared by tests and diagnostics.
template <typename Derived>
Matrix<typename Derived::Scalar> sample_covariance(const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  const RowVector<Scalar> mean = data.colwise().mean();
  const Matrix<Scalar> centered = data.rowwise() - mean;
  return centered.transpose() * centered / static_cast<Scalar>(data.rows() - 1);
}

/// Writes <prefix>.mean.mat (1xD), <prefix>.transform.mat (DxD) and
/// <prefix>.whitening.json {epsilon_used, eigenvalues}.
void save_whitening(const WhiteningModel<double>& model, const std::filesystem::path& prefix);
WhiteningModel<double> load_whitening(const std::filesystem::path& prefix);

}  // namespace airtran
