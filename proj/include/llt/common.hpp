#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace llt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy. The CLI maps InputError to exit status 2 and every other
// subclass of Error to exit status 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or rejected input (bad shapes, non-PD covariance, schema errors).
class InputError : public Error {
 public:
  using Error::Error;
};

// A point outside the domain of a potential or transform.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An integral that does not converge, e.g. a tilt outside the domain of the LLT.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Quadrature or sampler failure that is not a modelling error.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline Vec vec1(double x) { return Vec::Constant(1, x); }

}  // namespace llt
