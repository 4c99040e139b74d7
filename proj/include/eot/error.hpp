#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eot {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// All-zero, negative or non-finite weight vectors.
struct DegenerateWeights : Error {
  using Error::Error;
};

struct InvariantViolation : Error {
  using Error::Error;
};

// Exhaustive enumeration refused because the instance is too large.
struct GuardExceeded : Error {
  using Error::Error;
};

// A message or belief became non-finite. Carries the (component, measurement)
// pair that produced it; measurement is npos for per-component quantities.
struct NumericalFailure : Error {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  NumericalFailure(const std::string& what, std::size_t component_index,
                   std::size_t measurement_index = npos)
      : Error(what + " (component " + std::to_string(component_index) +
              (measurement_index == npos ? std::string()
                                         : ", measurement " + std::to_string(measurement_index)) +
              ")"),
        component(component_index),
        measurement(measurement_index) {}

  std::size_t component;
  std::size_t measurement;
};

}  // namespace eot
