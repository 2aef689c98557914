#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdtf {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched grids, slot layouts or sizes.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition was violated (bad parameter, negative test function, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A metric failed the positive-definiteness check at some node.
class SpdError : public Error {
 public:
  SpdError(std::size_t node, double smallest_eigenvalue);
  std::size_t node() const { return node_; }
  double smallest_eigenvalue() const { return eigenvalue_; }

 private:
  std::size_t node_;
  double eigenvalue_;
};

/// Requested time step exceeds the explicit stability limit.
class CflError : public Error {
 public:
  CflError(double requested, double suggested);
  double suggested_dt() const { return suggested_; }

 private:
  double suggested_;
};

/// A diffeomorphism lost orientation (det DPhi <= 0) at some node.
class DiffeoError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration could not be validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdtf
