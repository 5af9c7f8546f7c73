// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace posereg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received a non-finite or degenerate value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a precondition (empty input, bad argument range).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Model / run configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data is missing or invalid.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Carries the 1-based location.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, std::size_t column,
             const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ":" +
                  std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace posereg
