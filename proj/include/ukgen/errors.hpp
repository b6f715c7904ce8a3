#pragma once

#include <stdexcept>
#include <string>

namespace ukgen {

// Error kinds are stable identifiers; tests match on them rather than on
// message text.
enum class ErrKind {
  // cursors
  NoMatch,
  AmbiguousMatch,
  // scheduling
  NonConstantBound,
  NonDivisible,
  NotPerfectlyNested,
  DependenceViolation,
  NonContiguousWindow,
  WindowEscapes,
  IndexOutOfRange,
  NotAnAlloc,
  DimsDependOnLoop,
  TooManyLevels,
  PatternMismatch,
  MemSpaceMismatch,
  PrecisionMismatch,
  LaneRuleViolation,
  InstrTypeMismatch,
  UnknownParam,
  NonPositiveValue,
  // interpreter
  MissingBinding,
  UnknownInstr,
  InterpreterBoundsFault,
  SignatureMismatch,
  // targets / parsing
  ParseError,
  ValidationError,
  // codegen
  UnresolvedInstr,
  NonConstRegisterDim,
  // driver
  DimensionMismatch,
  MissingKernelForTile,
  ShapeMismatch,
  DegenerateCache,
  // misc
  Internal,
};

inline const char* err_kind_name(ErrKind k) {
  switch (k) {
    case ErrKind::NoMatch: return "NoMatch";
    case ErrKind::AmbiguousMatch: return "AmbiguousMatch";
    case ErrKind::NonConstantBound: return "NonConstantBound";
    case ErrKind::NonDivisible: return "NonDivisible";
    case ErrKind::NotPerfectlyNested: return "NotPerfectlyNested";
    case ErrKind::DependenceViolation: return "DependenceViolation";
    case ErrKind::NonContiguousWindow: return "NonContiguousWindow";
    case ErrKind::WindowEscapes: return "WindowEscapes";
    case ErrKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrKind::NotAnAlloc: return "NotAnAlloc";
    case ErrKind::DimsDependOnLoop: return "DimsDependOnLoop";
    case ErrKind::TooManyLevels: return "TooManyLevels";
    case ErrKind::PatternMismatch: return "PatternMismatch";
    case ErrKind::MemSpaceMismatch: return "MemSpaceMismatch";
    case ErrKind::PrecisionMismatch: return "PrecisionMismatch";
    case ErrKind::LaneRuleViolation: return "LaneRuleViolation";
    case ErrKind::InstrTypeMismatch: return "InstrTypeMismatch";
    case ErrKind::UnknownParam: return "UnknownParam";
    case ErrKind::NonPositiveValue: return "NonPositiveValue";
    case ErrKind::MissingBinding: return "MissingBinding";
    case ErrKind::UnknownInstr: return "UnknownInstr";
    case ErrKind::InterpreterBoundsFault: return "InterpreterBoundsFault";
    case ErrKind::SignatureMismatch: return "SignatureMismatch";
    case ErrKind::ParseError: return "ParseError";
    case ErrKind::ValidationError: return "ValidationError";
    case ErrKind::UnresolvedInstr: return "UnresolvedInstr";
    case ErrKind::NonConstRegisterDim: return "NonConstRegisterDim";
    case ErrKind::DimensionMismatch: return "DimensionMismatch";
    case ErrKind::MissingKernelForTile: return "MissingKernelForTile";
    case ErrKind::ShapeMismatch: return "ShapeMismatch";
    case ErrKind::DegenerateCache: return "DegenerateCache";
    case ErrKind::Internal: return "Internal";
  }
  return "?";
}

class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, const std::string& msg)
      : std::runtime_error(std::string(err_kind_name(kind)) + ": " + msg), kind_(kind) {}
  ErrKind kind() const { return kind_; }

 private:
  ErrKind kind_;
};

[[noreturn]] inline void fail(ErrKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace ukgen
