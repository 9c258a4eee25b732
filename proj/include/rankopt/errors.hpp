#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankopt {

// Violated precondition (bad sizes, mismatched indices, invalid config).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// AP is undefined for a query with no relevant points.
class NoRelevantPoints : public std::domain_error {
 public:
  NoRelevantPoints() : std::domain_error("query has no relevant points") {}
};

// A query decomposition with no positives or no negatives.
class EmptySide : public std::domain_error {
 public:
  EmptySide() : std::domain_error("query has an empty positive or negative set") {}
};

class EmptyGradient : public std::domain_error {
 public:
  EmptyGradient() : std::domain_error("batch has no usable query") {}
};

class PlacementFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed dataset or checkpoint file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Diverged : public std::runtime_error {
 public:
  explicit Diverged(std::size_t step)
      : std::runtime_error("non-finite weights after step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rankopt
