#pragma once

#include <stdexcept>
#include <string>

namespace torsionlab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or data invariant was violated by the caller.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A point that must lie in the solution region does not.
class ExteriorPoint : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure finished but missed its accuracy target.
/// `achieved` carries the measured residual so callers can report it.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A hypothesis of an identity or lemma does not hold on the instance.
class HypothesisFailure : public Error {
 public:
  HypothesisFailure(const std::string& what, double measured)
      : Error(what), measured_(measured) {}
  double measured() const noexcept { return measured_; }

 private:
  double measured_;
};

}  // namespace torsionlab
