#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corpusscope {

/// Bad input data: malformed corpus records, embedding files, arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus record rejected at ingest; carries the 1-based line number.
class IngestError : public InputError {
 public:
  IngestError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class MappingError : public InputError {
 public:
  using InputError::InputError;
};

/// An experiment cannot run as requested (label vocabularies differ, fold
/// count exceeds corpus size, ...).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace corpusscope
