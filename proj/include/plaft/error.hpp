#pragma once

#include <stdexcept>
#include <string>

namespace plaft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1)
      : Error(row >= 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}
  /// 1-based data row (header excluded), or -1 when not row specific.
  long row() const { return row_; }

 private:
  long row_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Data that cannot support a rank fit (too few events, constant columns).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class KnotDegeneracyError : public Error {
 public:
  KnotDegeneracyError(const std::string& what, int achievable)
      : Error(what), achievable_(achievable) {}
  int achievable() const { return achievable_; }

 private:
  int achievable_;
};

/// Requested operation is outside what a method can handle.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

/// GCV criterion undefined because df >= n.
class SaturationError : public Error {
 public:
  using Error::Error;
};

class FoldDegeneracyError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace plaft
