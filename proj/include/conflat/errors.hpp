#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace conflat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte position of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Expression evaluated outside its mathematical domain (sqrt of a negative,
/// log of a nonpositive value, division by zero).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::string subexpr, std::vector<double> point);
  const std::string& subexpression() const noexcept { return subexpr_; }
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::string subexpr_;
  std::vector<double> point_;
};

/// A point (or a finite-difference stencil point) lies outside the domain of
/// a surface.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: failed factorization, degenerate Jacobian,
/// non-converging iteration, nothing left to evaluate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid surface or run specification (schema violations, bad parameters).
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace conflat
