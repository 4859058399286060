// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cavp {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, records, captions).
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared in a value or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cavp
