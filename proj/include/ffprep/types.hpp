#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ffprep {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Largest Hilbert-space dimension any dense construction will accept (2^13).
inline constexpr std::size_t kMaxHilbertDim = std::size_t{1} << 13;

/// Malformed input: bad lattice, bad config, precondition violated by the caller.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-Hermitian input, NaN, vanishing norm, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run was asked to certify a result whose assumptions do not hold.
class CertificationRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ffprep
