#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ontotutor {

enum class ErrorCode {
  DuplicateId,
  UnknownConcept,
  SelfLoop,
  CycleDetected,
  AlreadyAssigned,
  NotAssigned,
  DanglingReference,
  ThresholdOutOfRange,
  ChannelMismatch,
  ParseError,
  ValidationError,
  UncoveredTarget,
  UnknownMetric,
  BadParameter,
  SchemaMismatch,
  OutOfRangeInput,
  DimensionMismatch,
  InsufficientExperience,
  UnknownAgent,
  ShapeMismatch,
  BadSpec,
  MissingTemplate,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::AlreadyAssigned: return "AlreadyAssigned";
    case ErrorCode::NotAssigned: return "NotAssigned";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UncoveredTarget: return "UncoveredTarget";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::OutOfRangeInput: return "OutOfRangeInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientExperience: return "InsufficientExperience";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. `code()` is the
/// machine-checkable reason; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure in a JSON or CSV document. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& detail, std::size_t line, std::size_t column)
      : Error(ErrorCode::ParseError,
              detail + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Violation {
  ErrorCode kind;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Raised by loaders when a well-formed document describes an invalid value.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(ErrorCode::ValidationError, summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

  bool has(ErrorCode kind) const {
    for (const auto& v : violations_)
      if (v.kind == kind) return true;
    return false;
  }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out = std::to_string(vs.size()) + " violation(s)";
    for (const auto& v : vs) out += "; " + std::string(to_string(v.kind)) + ": " + v.message;
    return out;
  }

  std::vector<Violation> violations_;
};

}  // namespace ontotutor
