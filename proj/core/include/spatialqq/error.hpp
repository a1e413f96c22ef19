#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqq {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  SingularDispersion,
  NotSymmetric,
  NotFactorizable,
  BadSpec,
  NoClosedForm,
  NoDensity,
  NotSpherical,
  NoConvergence,
  DegenerateSample,
  DegenerateKernel,
  DegeneratePooledSample,
  TargetUnreachable,
  NotMonotone,
  IoError,
  ParseError,
  EmptyInput,
  RaggedRows,
  DegenerateAbscissae,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. The kind identifies the failure; the message
/// carries module provenance and details for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::SingularDispersion: return "SingularDispersion";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotFactorizable: return "NotFactorizable";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::NoClosedForm: return "NoClosedForm";
    case ErrorKind::NoDensity: return "NoDensity";
    case ErrorKind::NotSpherical: return "NotSpherical";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::DegenerateKernel: return "DegenerateKernel";
    case ErrorKind::DegeneratePooledSample: return "DegeneratePooledSample";
    case ErrorKind::TargetUnreachable: return "TargetUnreachable";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::DegenerateAbscissae: return "DegenerateAbscissae";
  }
  return "Unknown";
}

}  // namespace sqq
