#pragma once

#include <stdexcept>
#include <string>

namespace dcs {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, inconsistent shared entries,
/// unknown identifiers, non-finite parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A stencil or lattice neighbour needed by a residual is outside the sample.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// The requested operation has no meaning for the given DDA (L1).
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Continuous flow hit a singular configuration (vanishing det C1).
class SingularFlow : public Error {
 public:
  using Error::Error;
};

/// A discrete map step has a vanishing denominator.
class SingularOrbit : public Error {
 public:
  SingularOrbit(const std::string& what, double quantity)
      : Error(what), quantity_(quantity) {}
  double quantity() const noexcept { return quantity_; }

 private:
  double quantity_;
};

/// Gauge matrix g of a shift-operator solution is not invertible.
class SingularGauge : public Error {
 public:
  using Error::Error;
};

}  // namespace dcs
