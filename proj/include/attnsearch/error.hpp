//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attnsearch {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by the interchange readers. `line()` is 1-based, 0 when the error
/// is not tied to a line.
class InterchangeError : public Error {
public:
  InterchangeError(const std::string &what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ParseError : public InterchangeError {
public:
  using InterchangeError::InterchangeError;
};

class StructuralError : public InterchangeError {
public:
  using InterchangeError::InterchangeError;
};

class RangeError : public InterchangeError {
public:
  using InterchangeError::InterchangeError;
};

class DuplicateError : public InterchangeError {
public:
  using InterchangeError::InterchangeError;
};

class InvariantError : public InterchangeError {
public:
  using InterchangeError::InterchangeError;
};

class MissingWordError : public Error {
public:
  explicit MissingWordError(const std::string &word)
      : Error("word not in embedding table: '" + word + "'"), word_(word) {}

  const std::string &word() const noexcept { return word_; }

private:
  std::string word_;
};

class ParamError : public Error {
public:
  using Error::Error;
};

class SizeLimitError : public Error {
public:
  using Error::Error;
};

/// The index was built with different graph/match parameters or embeddings.
class StaleIndexError : public Error {
public:
  using Error::Error;
};

class AttributionError : public Error {
public:
  using Error::Error;
};

class EvalError : public Error {
public:
  using Error::Error;
};

}  // namespace attnsearch
