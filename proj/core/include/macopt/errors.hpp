// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace macopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario or configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (non-finite value,
/// zero noise, all-zero channel where gain is required).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Array shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. The message names the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The requested rate targets cannot be met.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (e.g. a decoding order that is
/// not sorted by the dual prices).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Brute-force routines refuse instances beyond their size guard.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown inside an iterative method (NaN loss, corrupted
/// parameters).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Stored model parameters are non-finite or inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Every trial of an experiment failed, so there is nothing to aggregate.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

}  // namespace macopt
