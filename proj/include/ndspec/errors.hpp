#pragma once

#include <stdexcept>
#include <string>

namespace ndspec {

// Input document could not be parsed or failed schema validation.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A spectrum document violated Hermitian symmetry beyond tolerance.
class SymmetryError : public std::runtime_error {
 public:
  explicit SymmetryError(const std::string& what) : std::runtime_error(what) {}
};

// Coefficient support does not fit the representable frequency range of a grid.
class AliasError : public std::runtime_error {
 public:
  explicit AliasError(const std::string& what) : std::runtime_error(what) {}
};

// A scalar sample required to be strictly positive was not.
class NotPositive : public std::runtime_error {
 public:
  explicit NotPositive(const std::string& what) : std::runtime_error(what) {}
};

// Pointwise Cholesky failed: the matrix value is not positive definite.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error(what) {}
};

// The per-slice completion system was numerically singular.
class SliceSingular : public std::runtime_error {
 public:
  explicit SliceSingular(const std::string& what) : std::runtime_error(what) {}
};

// A reduced-stage mean factor was not invertible at some grid point.
class HatSingular : public std::runtime_error {
 public:
  explicit HatSingular(const std::string& what) : std::runtime_error(what) {}
};

// The factor's origin value (DC coefficient) was not invertible.
class OriginSingular : public std::runtime_error {
 public:
  explicit OriginSingular(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace ndspec
