#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace equifold {

enum class ErrorKind {
  NotNormal,
  GroupMismatch,
  InconsistentVoltage,
  DisconnectedBase,
  InvalidGraph,
  NotEquivariant,
  CoverMismatch,
  NonHermitianBase,
  ContextMismatch,
  PartitionTooCoarse,
  NotInvariant,
  NotHermitian,
  NotGraded,
  QuadratureUnderresolved,
  BadParameterization,
  NoSpectralGap,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotNormal: return "NotNormal";
    case ErrorKind::GroupMismatch: return "GroupMismatch";
    case ErrorKind::InconsistentVoltage: return "InconsistentVoltage";
    case ErrorKind::DisconnectedBase: return "DisconnectedBase";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::NotEquivariant: return "NotEquivariant";
    case ErrorKind::CoverMismatch: return "CoverMismatch";
    case ErrorKind::NonHermitianBase: return "NonHermitianBase";
    case ErrorKind::ContextMismatch: return "ContextMismatch";
    case ErrorKind::PartitionTooCoarse: return "PartitionTooCoarse";
    case ErrorKind::NotInvariant: return "NotInvariant";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotGraded: return "NotGraded";
    case ErrorKind::QuadratureUnderresolved: return "QuadratureUnderresolved";
    case ErrorKind::BadParameterization: return "BadParameterization";
    case ErrorKind::NoSpectralGap: return "NoSpectralGap";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace equifold
