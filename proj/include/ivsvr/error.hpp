#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivsvr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid learning-rate schedule or hyper-parameter.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyModelError : public Error {
 public:
  using Error::Error;
};

// k(x, x) == 0, local fitness undefined.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

// Schur complement below the singularity guard; the vector cannot be inserted.
class NearSingularError : public Error {
 public:
  using Error::Error;
};

class UnrecoverableStateError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Option price outside the no-arbitrage band.
class NoSolutionError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class StreamError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class OrderError : public ParseError {
 public:
  using ParseError::ParseError;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivsvr
