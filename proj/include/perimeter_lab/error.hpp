#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perimeter_lab {

enum class ErrorKind {
  CrackNotInterior,
  MarginViolation,
  InvalidGeometry,
  UnknownName,
  GeometryTooCoarse,
  ParseError,
  InvariantViolation,
  RegionOutsideGrid,
  EpsTooSmall,
  GeometryMismatch,
  BudgetViolated,
  RefinementTooCoarse,
  DegenerateBall,
  WindowUnreachable,
  NoCertifiablePoints,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::CrackNotInterior: return "CrackNotInterior";
    case ErrorKind::MarginViolation: return "MarginViolation";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::UnknownName: return "UnknownName";
    case ErrorKind::GeometryTooCoarse: return "GeometryTooCoarse";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::RegionOutsideGrid: return "RegionOutsideGrid";
    case ErrorKind::EpsTooSmall: return "EpsTooSmall";
    case ErrorKind::GeometryMismatch: return "GeometryMismatch";
    case ErrorKind::BudgetViolated: return "BudgetViolated";
    case ErrorKind::RefinementTooCoarse: return "RefinementTooCoarse";
    case ErrorKind::DegenerateBall: return "DegenerateBall";
    case ErrorKind::WindowUnreachable: return "WindowUnreachable";
    case ErrorKind::NoCertifiablePoints: return "NoCertifiablePoints";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` carries the error class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace perimeter_lab
