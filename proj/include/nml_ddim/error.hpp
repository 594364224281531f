#ifndef NML_DDIM_ERROR_HPP
#define NML_DDIM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace nml_ddim {

/// Stable, machine-readable failure categories. The CLI prints code_name()
/// verbatim, so renaming an enumerator is a breaking change.
enum class ErrorCode {
  OutOfRangeSymbol,
  EmptySequence,
  InvalidParams,
  ZeroDimensional,
  IntractableEnumeration,
  HorizonMismatch,
  AlphaOutOfRange,
  SupportViolation,
  ExactIntractable,
  InvalidChangePoints,
  EmptySegment,
  AdjacentEqualModels,
  InfeasibleConstraints,
  InvalidSplit,
  InvalidArgument,
  SpecParseError,
  DuplicateMember,
  DataFormatError,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nml_ddim

#endif  // NML_DDIM_ERROR_HPP
