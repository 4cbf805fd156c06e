#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace semdrop {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter values outside their mathematical domain (sigma <= 0, |rho| >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Missingness-mask violations (non-monotone patterns, unobserved first occasion).
class PatternError : public Error {
 public:
  using Error::Error;
};

// Factorization/solve failures (non-SPD blocks, singular systems).
class LinalgError : public Error {
 public:
  using Error::Error;
};

// Not enough usable data for the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model fitting failures (rank deficiency, degenerate fits).
class FitError : public Error {
 public:
  using Error::Error;
};

// Complete separation in a logistic fit: the MLE diverges.
class SeparationError : public FitError {
 public:
  using FitError::FitError;
};

// Non-finite values or failed numeric transforms inside an otherwise valid call.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An optimizer cannot make progress (non-concave curvature, failed line search).
class OptimizationError : public Error {
 public:
  using Error::Error;
};

// Iteration cap reached; carries the last iterate for diagnostics.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> last_iterate)
      : Error(msg), last_iterate(std::move(last_iterate)) {}
  std::vector<double> last_iterate;
};

// Accept-reject sampler exceeded its attempt budget.
class SamplerStallError : public Error {
 public:
  SamplerStallError(const std::string& msg, long attempts, double acceptance_estimate)
      : Error(msg), attempts(attempts), acceptance_estimate(acceptance_estimate) {}
  long attempts = 0;
  double acceptance_estimate = 0.0;
};

// Caller broke an interface contract (dimension mismatch and the like).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; row/column are 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long row = 0, long col = 0)
      : Error(msg), row(row), col(col) {}
  long row = 0;
  long col = 0;
};

// Replication study exceeded its failure budget.
class HarnessError : public Error {
 public:
  using Error::Error;
};

// An information matrix lost positive definiteness; reported, never masked.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

}  // namespace semdrop
