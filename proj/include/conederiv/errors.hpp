#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conederiv {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when domain filtering leaves too few cone samples to decide anything.
class InsufficientSamples : public std::runtime_error {
 public:
  InsufficientSamples(std::size_t survivors, std::size_t required)
      : std::runtime_error("insufficient samples: " + std::to_string(survivors) +
                           " survived, " + std::to_string(required) + " required"),
        survivors_(survivors),
        required_(required) {}

  std::size_t survivors() const noexcept { return survivors_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t survivors_;
  std::size_t required_;
};

struct RatioViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct FirstCoordinateDegenerate : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnknownFixture : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace conederiv
