#pragma once

#include <stdexcept>
#include <string>

namespace eepc {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a function (negative SINR, bad index, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A bracketed scalar solve found no sign change.
class NoRootError : public Error {
public:
  using Error::Error;
};

/// The efficiency function is not sigmoidal, so beta* / gamma* are undefined.
class NotSigmoidalError : public Error {
public:
  using Error::Error;
};

/// 1 - ((K-1)/N) x <= 0: the system is loaded beyond the non-saturated regime.
class InfeasibleLoadError : public Error {
public:
  using Error::Error;
};

/// The sufficient condition for a unique operating point does not hold.
class UniquenessViolationError : public Error {
public:
  using Error::Error;
};

/// Malformed game, chain or scenario description.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Transition kernel has a zero entry.
class NotIrreducibleError : public Error {
public:
  using Error::Error;
};

/// No enumerated point satisfies individual rationality.
class EmptyRegionError : public Error {
public:
  using Error::Error;
};

}  // namespace eepc
