#pragma once

#include <stdexcept>
#include <string>

namespace ksm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state or adjoint coefficient overflowed or became NaN.
class NonFinite : public Error {
 public:
  NonFinite(const std::string& where, double time)
      : Error(where + ": non-finite value at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("Newton iteration did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class UnstableSubspaceEmpty : public Error {
 public:
  UnstableSubspaceEmpty() : Error("steady state has no unstable eigenvalues") {}
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateAdjoint : public Error {
 public:
  using Error::Error;
};

class DegenerateGrid : public Error {
 public:
  using Error::Error;
};

class SectionMiss : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& constraint)
      : Error(field + ": " + constraint), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class ChecksumMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace ksm
