#pragma once

#include <stdexcept>
#include <string>

namespace aeaudit {

enum class ErrorKind {
  InputDomain,
  Numerical,
  Format,
  Version,
  ShapeMismatch,
  DegenerateBasis,
  UnsupportedDimension,
  Training,
  Refused,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above; the
/// C API maps them one-to-one onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace aeaudit
