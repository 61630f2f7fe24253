#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

namespace airtran {

/// Row-major f32 storage matching the on-disk layout. Arithmetic is done in
/// double after `.cast<double>()`.
using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// On-disk layout, little-endian throughout:
//   "AIRT" | u32 version=1 | u8 dtype=0 (f32) | 3 zero bytes | u64 rows | u64 cols | f32[rows*cols]
inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;
inline constexpr std::size_t kMatrixHeaderBytes = 28;

/// Throws Error{Data} naming the first non-finite entry, or Error{Shape} if empty.
void validate_matrix(const EmbeddingMatrix& matrix);

void write_matrix(const EmbeddingMatrix& matrix, std::ostream& sink);
EmbeddingMatrix read_matrix(std::istream& source);

/// Writes to a temporary sibling then renames, so readers never see a partial file.
void save_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);

}  // namespace airtran
