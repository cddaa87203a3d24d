#pragma once

#include <stdexcept>
#include <string>

namespace sdpet {

enum class ErrorKind {
  InvalidGeometry,
  Shape,
  InvalidSubsets,
  InvalidPhantom,
  InvalidSpec,
  Domain,
  Config,
  DegenerateImage,
  NumericalFailure,
  UndefinedMetric,
  Validation,
  ReferenceMissing,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the toolkit; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "invalid geometry";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::InvalidSubsets: return "invalid subsets";
    case ErrorKind::InvalidPhantom: return "invalid phantom";
    case ErrorKind::InvalidSpec: return "invalid simulation spec";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::DegenerateImage: return "degenerate image";
    case ErrorKind::NumericalFailure: return "numerical failure";
    case ErrorKind::UndefinedMetric: return "undefined metric";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::ReferenceMissing: return "reference missing";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

}  // namespace sdpet
