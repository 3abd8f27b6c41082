#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stclear {

enum class ErrorCode {
  UnknownNode,
  UnknownProduct,
  TimeOutOfRange,
  BackwardTimeArc,
  SelfLoopArc,
  InvalidTimeGrid,
  InvalidInstance,
  DimensionMismatch,
  NotOptimal,
  UndefinedNodalPrice,
  InvalidParams,
  Io,
  Schema,
  Validation,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::UnknownProduct: return "UnknownProduct";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::BackwardTimeArc: return "BackwardTimeArc";
    case ErrorCode::SelfLoopArc: return "SelfLoopArc";
    case ErrorCode::InvalidTimeGrid: return "InvalidTimeGrid";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotOptimal: return "NotOptimal";
    case ErrorCode::UndefinedNodalPrice: return "UndefinedNodalPrice";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::Validation: return "Validation";
  }
  return "Unknown";
}

/// Raised for modeling and input errors. Mathematical outcomes of a solve
/// (infeasible, unbounded, ...) are reported through status codes instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stclear
