#pragma once

#include <stdexcept>
#include <string>

namespace airtran {

enum class ErrorKind {
  Io,
  Format,
  Version,
  Length,
  Data,
  Schema,
  Capacity,
  DegenerateInput,
  Shape,
  Singularity,
  Numeric,
  EmptyInput,
  Config,
  Mismatch,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Re-throws `e` with a context prefix, keeping its kind.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  throw Error(e.kind(), context + ": " + e.what());
}

}  // namespace airtran
