#pragma once

#include <stdexcept>
#include <string>

namespace formplan {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MapError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Raised by path extraction. `Unreachable` is an expected outcome on
/// disconnected maps; `BudgetExceeded` points at a solver defect.
class PlanningError : public Error {
 public:
  enum class Kind { Unreachable, BudgetExceeded, InvalidGoal, OutOfBounds };

  PlanningError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Scenario/config schema error with the offending field and, when known,
/// the 1-based source line.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, int line, const std::string& message)
      : Error(format(field, line, message)), field_(std::move(field)), line_(line), message_(message) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }
  /// The message without the line/field prefix.
  const std::string& message() const { return message_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + message;
  }

  std::string field_;
  int line_ = 0;
  std::string message_;
};

}  // namespace formplan
