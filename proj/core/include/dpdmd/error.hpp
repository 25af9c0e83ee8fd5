// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dpdmd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its documented constraints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where training cannot continue.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An artifact a command depends on (e.g. a teacher checkpoint) is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (t = 0 for a
/// score, alpha_bar = 0 for an x0 conversion, zero-norm feature vectors...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpdmd
