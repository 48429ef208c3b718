#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data. `line()` is 1-based, or 0 when no line applies
/// (for JSONL readers it is the record's line).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Training could not proceed (degenerate corpus, no positives, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Model bundle missing, corrupt or of the wrong kind.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace oid
