#pragma once

#include <stdexcept>
#include <string>

namespace mkv {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Request is well-formed but outside what the implementation supports.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// A theorem hypothesis required by the algorithm does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step = -1) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class NoRealRootError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace mkv
