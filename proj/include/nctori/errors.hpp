#pragma once

#include <stdexcept>
#include <string>

namespace nctori {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lattice index length or theta dimension disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Two elements built over different deformation matrices were combined.
class ThetaMismatch : public Error {
 public:
  using Error::Error;
};

/// A Fourier support does not fit in the margin of a truncation.
class MarginViolation : public Error {
 public:
  using Error::Error;
};

/// Spectrum of a truncated element touches a branch cut or zero.
class SpectralGapError : public Error {
 public:
  using Error::Error;
};

/// Generic numeric failure (singular system, solver did not converge, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad argument that is not covered by the more specific classes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nctori
