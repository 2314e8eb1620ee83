#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace impa {

enum class ErrorKind {
  InvalidSpec,
  DesignInfeasible,
  DomainError,
  WidthSolveFailure,
  BracketError,
  InvalidGeometry,
  GridMismatch,
  SingularConversion,
  IoError,
  DivergentInductance,
  InvalidTarget,
  BelowThreshold,
  IdlerOutOfRange,
  DivisionDomain,
  Unphysical,
  NonConvergence,
  DegenerateData,
  PoorFit,
  NoCompression,
  ConfigError,
};

constexpr std::string_view kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::DesignInfeasible: return "DesignInfeasible";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::WidthSolveFailure: return "WidthSolveFailure";
    case ErrorKind::BracketError: return "BracketError";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::SingularConversion: return "SingularConversion";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DivergentInductance: return "DivergentInductance";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::BelowThreshold: return "BelowThreshold";
    case ErrorKind::IdlerOutOfRange: return "IdlerOutOfRange";
    case ErrorKind::DivisionDomain: return "DivisionDomain";
    case ErrorKind::Unphysical: return "Unphysical";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::PoorFit: return "PoorFit";
    case ErrorKind::NoCompression: return "NoCompression";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

inline void require_positive(double value, ErrorKind kind, const char* what) {
  if (!(value > 0.0)) throw Error(kind, std::string(what) + " must be positive");
}

}  // namespace detail
}  // namespace impa
