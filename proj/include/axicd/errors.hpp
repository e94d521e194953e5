#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace axicd {

enum class ErrorKind {
  NonPositiveEntropy,
  CavitatedState,
  DegenerateAxialFlow,
  DegenerateInterface,
  ExtentMismatch,
  PicardDiverged,
  LinearSolveFailed,
  AxisSingularity,
  FluxOutOfRange,
  NegativeMatchedSpeed,
  NegativeRadicand,
  InterfaceEscape,
  OuterDiverged,
  FreeBoundaryDiverged,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveEntropy: return "NonPositiveEntropy";
    case ErrorKind::CavitatedState: return "CavitatedState";
    case ErrorKind::DegenerateAxialFlow: return "DegenerateAxialFlow";
    case ErrorKind::DegenerateInterface: return "DegenerateInterface";
    case ErrorKind::ExtentMismatch: return "ExtentMismatch";
    case ErrorKind::PicardDiverged: return "PicardDiverged";
    case ErrorKind::LinearSolveFailed: return "LinearSolveFailed";
    case ErrorKind::AxisSingularity: return "AxisSingularity";
    case ErrorKind::FluxOutOfRange: return "FluxOutOfRange";
    case ErrorKind::NegativeMatchedSpeed: return "NegativeMatchedSpeed";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::InterfaceEscape: return "InterfaceEscape";
    case ErrorKind::OuterDiverged: return "OuterDiverged";
    case ErrorKind::FreeBoundaryDiverged: return "FreeBoundaryDiverged";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

//! Every failure raised by the solver carries a kind so callers can branch
//! on it (damping, exit codes) without parsing messages.
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  //! The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw SolverError(kind, what);
}

}  // namespace axicd
