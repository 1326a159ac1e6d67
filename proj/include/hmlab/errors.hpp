#pragma once

#include <stdexcept>

namespace hmlab {

/// Base class for all hmlab errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stencil or mask operation left no valid evaluation nodes.
class EmptyInteriorError : public Error {
 public:
  using Error::Error;
};

/// A metric was evaluated outside the region where its density is defined.
class DomainGuardError : public Error {
 public:
  using Error::Error;
};

/// A radial metric was evaluated at r = 0 although rho'(0) != 0.
class RadialSingularityError : public Error {
 public:
  using Error::Error;
};

/// An identity requiring J > 0 was evaluated where J <= 0.
class NotSensePreservingError : public Error {
 public:
  using Error::Error;
};

/// A positivity-constrained field has no nodes above the floor.
class FieldNotPositiveError : public Error {
 public:
  using Error::Error;
};

/// Malformed HMFIELD file.
class FieldFormatError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment specification (metric/map strings, CLI flags).
class SpecError : public Error {
 public:
  using Error::Error;
};

/// The linear initialization solve did not converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A theorem-check hypothesis (e.g. K2 >= 0) fails for the given input.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmlab
