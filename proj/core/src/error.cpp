#include "orthoboot/error.hpp"

namespace orthoboot {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::io: return "io";
    case ErrorCategory::config: return "config";
    case ErrorCategory::internal: return "internal";
  }
  return "unknown";
}

}  // namespace orthoboot
