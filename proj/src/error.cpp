#include "airtran/error.hpp"

namespace airtran {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Version: return "version";
    case ErrorKind::Length: return "length";
    case ErrorKind::Data: return "data";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Mismatch: return "mismatch";
  }
  return "unknown";
}

}  // namespace airtran
