#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nsfm {

// Base for every error raised by the library. Callers that only need to
// report can catch this; the CLI maps ConfigError to exit status 1 and the
// rest to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape, length or size-cap violations.
class SizingError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data (datasets, checkpoints, config files).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::optional<std::size_t> offset() const { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};

// Invalid user-facing configuration (schedules, noise levels, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested matrix order is not supported by the construction.
class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

// A matrix expected to be full rank turned out numerically singular.
class RankError : public Error {
 public:
  using Error::Error;
};

// All-zero or otherwise unusable data.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced during a computation. `index` is the step or
// batch position where it was first seen.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(const std::string& what, std::size_t epoch,
                          std::size_t step)
      : Error(what + " (epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step) + ")"),
        epoch_(epoch),
        step_(step) {}

  std::size_t epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t epoch_;
  std::size_t step_;
};

}  // namespace nsfm
