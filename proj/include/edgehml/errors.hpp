#pragma once

#include <stdexcept>
#include <string>

namespace edgehml {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct CapacityError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct EmptyBatch : Error {
  using Error::Error;
};
struct NonFiniteGradient : Error {
  using Error::Error;
};
struct EmptyTestSet : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct SpecError : Error {
  using Error::Error;
};

}  // namespace edgehml
