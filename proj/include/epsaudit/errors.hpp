#pragma once

#include <stdexcept>
#include <string>

namespace epsaudit {

// Base class for all library errors. The CLI maps subclasses raised during
// computation to exit code 3; anything raised while reading input maps to 2.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public AuditError {
 public:
  using AuditError::AuditError;
};

// Mismatched vector dimensions (e.g. label length vs prediction length).
class ShapeError : public AuditError {
 public:
  using AuditError::AuditError;
};

// All losses identical; the normalize step has no range to work with.
class DegenerateLossesError : public AuditError {
 public:
  using AuditError::AuditError;
};

// Sample unusable for fitting (too small, zero variance, collapsed component).
class DegenerateSampleError : public AuditError {
 public:
  using AuditError::AuditError;
};

class EmptyCurveError : public AuditError {
 public:
  using AuditError::AuditError;
};

class EmptyEnsembleError : public AuditError {
 public:
  using AuditError::AuditError;
};

class EmptySampleError : public AuditError {
 public:
  using AuditError::AuditError;
};

class InsufficientDataError : public AuditError {
 public:
  using AuditError::AuditError;
};

// Malformed input file (CSV/manifest).
class ParseError : public AuditError {
 public:
  using AuditError::AuditError;
};

class UnknownFormatError : public AuditError {
 public:
  using AuditError::AuditError;
};

}  // namespace epsaudit
