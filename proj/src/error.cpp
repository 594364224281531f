#include "nml_ddim/error.hpp"

namespace nml_ddim {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OutOfRangeSymbol: return "OutOfRangeSymbol";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ZeroDimensional: return "ZeroDimensional";
    case ErrorCode::IntractableEnumeration: return "IntractableEnumeration";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::ExactIntractable: return "ExactIntractable";
    case ErrorCode::InvalidChangePoints: return "InvalidChangePoints";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::AdjacentEqualModels: return "AdjacentEqualModels";
    case ErrorCode::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpecParseError: return "SpecParseError";
    case ErrorCode::DuplicateMember: return "DuplicateMember";
    case ErrorCode::DataFormatError: return "DataFormatError";
  }
  return "Unknown";
}

}  // namespace nml_ddim
