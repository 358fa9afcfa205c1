#pragma once

#include <stdexcept>
#include <string>

namespace pft {

// Base of every error raised by the library. Callers that only care about
// "something in pft failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (step after terminal, index out of
// range, mismatched lengths).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class CalibrationFailed : public Error {
 public:
  using Error::Error;
};

class EmptyStore : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericDivergence : public Error {
 public:
  using Error::Error;
};

}  // namespace pft
