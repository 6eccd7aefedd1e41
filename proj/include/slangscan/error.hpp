#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slangscan {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that cannot be read at all (unreadable stream, unknown format).
class IngestError : public Error {
 public:
  using Error::Error;
};

class LexiconError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A constrained-answer reply that does not fit the expected shape.
class AnswerParseError : public Error {
 public:
  enum class Kind { CountMismatch, OutOfVocabulary };

  AnswerParseError(Kind kind, std::string message, std::optional<std::size_t> index = std::nullopt)
      : Error(std::move(message)), kind_(kind), index_(index) {}

  Kind kind() const noexcept { return kind_; }
  /// Offending token index for OutOfVocabulary.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Kind kind_;
  std::optional<std::size_t> index_;
};

/// Gold items without a matching prediction.
class MissingPredictionError : public Error {
 public:
  explicit MissingPredictionError(std::vector<std::string> ids);
  const std::vector<std::string>& missing_ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

}  // namespace slangscan
