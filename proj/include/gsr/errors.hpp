#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class InvalidGraph : public Error {
public:
  using Error::Error;
};

class DegenerateBandwidth : public Error {
public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
public:
  using Error::Error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class StaleForwardState : public Error {
public:
  using Error::Error;
};

/// Raised when the training objective becomes NaN or infinite.
class NonFiniteLoss : public Error {
public:
  NonFiniteLoss(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class InvalidConfig : public Error {
public:
  using Error::Error;
};

class BadMagic : public Error {
public:
  using Error::Error;
};

class TruncatedFile : public Error {
public:
  using Error::Error;
};

class EmptyClass : public Error {
public:
  using Error::Error;
};

class InsufficientRuns : public Error {
public:
  using Error::Error;
};

class CheckpointError : public Error {
public:
  using Error::Error;
};

}  // namespace gsr
