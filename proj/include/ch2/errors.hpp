#pragma once

#include <stdexcept>
#include <string>

namespace ch2 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A weight violates the admissibility hypotheses (parameter ranges,
/// derivative bound, or integrability of v e^{-|x|}).
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// A value would overflow the double range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Sampled functions live on different grids or have wrong lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad argument domain (empty window, non-positive cap, malformed grid).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// No admissible samples inside a fit or extraction window.
class WindowError : public Error {
 public:
  using Error::Error;
};

/// Hypotheses of a check are not met by the supplied data.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Raised from a time step when a stage produced non-finite values.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The solution tails reached the edge of the truncated line.
class DomainTooSmallError : public Error {
 public:
  DomainTooSmallError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace ch2
