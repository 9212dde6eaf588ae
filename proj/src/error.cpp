#include "gradcode/error.hpp"

namespace gradcode {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::DivisibilityError: return "DivisibilityError";
    case Errc::RetryExhausted: return "RetryExhausted";
    case Errc::SpanFailure: return "SpanFailure";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::StarvedIteration: return "StarvedIteration";
    case Errc::MismatchedConfigs: return "MismatchedConfigs";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gradcode
