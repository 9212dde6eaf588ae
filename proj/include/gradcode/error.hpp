#pragma once

#include <stdexcept>
#include <string>

namespace gradcode {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  SingularSystem,
  DivisibilityError,
  RetryExhausted,
  SpanFailure,
  BudgetExceeded,
  IndexOutOfRange,
  ParseError,
  InvalidAlpha,
  DegenerateLabels,
  StarvedIteration,
  MismatchedConfigs,
  IoError,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gradcode
