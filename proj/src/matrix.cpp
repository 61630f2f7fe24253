#include "airtran/matrix.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "airtran/error.hpp"
#include "airtran/fs_util.hpp"

namespace airtran {

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'I', 'R', 'T'};

template <typename T>
void put_le(std::vector<char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void validate_matrix(const EmbeddingMatrix& matrix) {
  if (matrix.rows() < 1 || matrix.cols() < 1) {
    throw Error(ErrorKind::Shape, "matrix must have at least one row and one column, got " +
                                      std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()));
  }
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (!std::isfinite(matrix(r, c))) {
        throw Error(ErrorKind::Data,
                    "non-finite value at row " + std::to_string(r) + ", col " + std::to_string(c));
      }
    }
  }
}

void write_matrix(const EmbeddingMatrix& matrix, std::ostream& sink) {
  validate_matrix(matrix);
  const auto rows = static_cast<std::uint64_t>(matrix.rows());
  const auto cols = static_cast<std::uint64_t>(matrix.cols());

  std::vector<char> bytes;
  bytes.reserve(kMatrixHeaderBytes + 4 * rows * cols);
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(bytes, kMatrixFormatVersion);
  put_le<std::uint8_t>(bytes, kDtypeF32);
  bytes.insert(bytes.end(), 3, '\0');
  put_le<std::uint64_t>(bytes, rows);
  put_le<std::uint64_t>(bytes, cols);
  // EmbeddingMatrix is row-major, so data() is already in file order.
  const float* values = matrix.data();
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(values[i]));
  }

  const auto start = sink.tellp();
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) {
    const auto pos = sink.tellp();
    const long long offset = (pos >= 0 && start >= 0) ? static_cast<long long>(pos - start) : -1;
    throw Error(ErrorKind::Io, "matrix write failed at byte offset " + std::to_string(offset));
  }
}

EmbeddingMatrix read_matrix(std::istream& source) {
  std::array<unsigned char, kMatrixHeaderBytes> header{};
  source.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got_header = static_cast<std::size_t>(source.gcount());
  if (got_header >= 4 && !std::equal(kMagic.begin(), kMagic.end(), header.begin(),
                                     [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw Error(ErrorKind::Format, "bad magic, expected \"AIRT\"");
  }
  if (got_header < kMatrixHeaderBytes) {
    throw Error(ErrorKind::Length, "truncated header: expected " + std::to_string(kMatrixHeaderBytes) +
                                       " bytes, got " + std::to_string(got_header));
  }
  const auto version = get_le<std::uint32_t>(header.data() + 4);
  if (version != kMatrixFormatVersion) {
    throw Error(ErrorKind::Version, "unsupported version " + std::to_string(version));
  }
  const auto dtype = header[8];
  if (dtype != kDtypeF32) throw Error(ErrorKind::Version, "unsupported dtype " + std::to_string(dtype));
  const auto rows = get_le<std::uint64_t>(header.data() + 12);
  const auto cols = get_le<std::uint64_t>(header.data() + 20);
  if (rows < 1 || cols < 1) {
    throw Error(ErrorKind::Format, "declared shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                       " is empty");
  }
  if (cols != 0 && rows > (std::uint64_t{1} << 62) / cols / 4) {
    throw Error(ErrorKind::Format, "declared shape too large");
  }

  const std::uint64_t expected = 4 * rows * cols;
  std::vector<unsigned char> payload(expected);
  source.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
  const auto actual = static_cast<std::uint64_t>(source.gcount());
  if (actual != expected) {
    throw Error(ErrorKind::Length, "payload for " + std::to_string(rows) + "x" + std::to_string(cols) +
                                       " expects " + std::to_string(expected) + " bytes, got " +
                                       std::to_string(actual));
  }

  EmbeddingMatrix matrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  float* values = matrix.data();
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    values[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload.data() + 4 * i));
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::Data,
                  "non-finite value at row " + std::to_string(i / cols) + ", col " + std::to_string(i % cols));
    }
  }
  return matrix;
}

void save_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::ostringstream buffer(std::ios::binary);
  write_matrix(matrix, buffer);
  write_file_atomic(path, buffer.str());
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_matrix(in);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

}  // namespace airtran
