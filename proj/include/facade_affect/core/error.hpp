#pragma once

#include <stdexcept>
#include <string>

namespace facade_affect {

// Root of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable or unwritable.
class IoError : public Error {
public:
  using Error::Error;
};

// A record or file violates a schema or type invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Arguments outside an operation's preconditions.
class InputError : public Error {
public:
  using Error::Error;
};

// Input is well formed but carries no information (empty mask, constant vector, ...).
class DegenerateInputError : public InputError {
public:
  using InputError::InputError;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Model cannot be fitted as specified (rank deficiency, too few groups).
class ModelError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public ModelError {
public:
  using ModelError::ModelError;
};

// Assignment parameters cannot satisfy the requested constraints.
class FeasibilityError : public Error {
public:
  using Error::Error;
};

class SimulationError : public Error {
public:
  using Error::Error;
};

}  // namespace facade_affect
