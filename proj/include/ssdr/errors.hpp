#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssdr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// Cholesky factorization met a non-positive pivot.
class NotSpd : public Error {
public:
  NotSpd(std::size_t pivot, const std::string& what)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

private:
  std::size_t pivot_;
};

class InsufficientClassSize : public Error {
public:
  InsufficientClassSize(int class_id, std::size_t size, const std::string& what)
      : Error(what), class_id_(class_id), size_(size) {}
  int class_id() const noexcept { return class_id_; }
  std::size_t size() const noexcept { return size_; }

private:
  int class_id_;
  std::size_t size_;
};

class DegenerateFeature : public Error {
public:
  DegenerateFeature(std::size_t column, const std::string& what)
      : Error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t column_;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// n_i too small for an estimator's closed form (e.g. Haff needs n > p + 2).
class SampleSizeError : public Error {
public:
  using Error::Error;
};

class NumericalDomainError : public Error {
public:
  using Error::Error;
};

/// Bodnar shrinkage denominator vanished (S^-1 proportional to the target).
class DegeneracyError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(int iterations, double primal, double dual,
                   const std::string& what)
      : Error(what), iterations_(iterations), primal_(primal), dual_(dual) {}
  int iterations() const noexcept { return iterations_; }
  double primal_residual() const noexcept { return primal_; }
  double dual_residual() const noexcept { return dual_; }

private:
  int iterations_;
  double primal_;
  double dual_;
};

/// Failure while estimating the precision of one class; wraps the cause.
class ClassEstimationError : public Error {
public:
  ClassEstimationError(int class_id, const std::string& what)
      : Error(what), class_id_(class_id) {}
  int class_id() const noexcept { return class_id_; }

private:
  int class_id_;
};

class TheoremInapplicable : public Error {
public:
  using Error::Error;
};

class StratificationError : public Error {
public:
  using Error::Error;
};

class TuningError : public Error {
public:
  using Error::Error;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

}  // namespace ssdr
