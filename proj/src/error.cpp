#include "aeaudit/error.hpp"

namespace aeaudit {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InputDomain: return "input-domain";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Format: return "format";
    case ErrorKind::Version: return "version";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::DegenerateBasis: return "degenerate-basis";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::Training: return "training";
    case ErrorKind::Refused: return "refused";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace aeaudit
