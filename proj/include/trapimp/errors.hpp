#pragma once

#include <stdexcept>
#include <string>

namespace trapimp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Special-function or Green's-function evaluation failed to converge or was
/// asked for an argument outside its supported range.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Energy sits on a pole of the trap Green's function (an oscillator level).
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double energy) : Error(what), energy_(energy) {}
  double energy() const noexcept { return energy_; }

 private:
  double energy_;
};

/// Invalid physical configuration (coincident impurities, bad couplings, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace trapimp
