#pragma once

#include <stdexcept>
#include <string>

namespace traitfolio {

// Base of every error the library raises. The category drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Category { Config, Io, Numerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

// Malformed input text (CSV rows, config lines, checkpoints).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(Category::Config, what) {}
};

// A value outside the domain an operation accepts.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(Category::Config, what) {}
};

// Index out of range for a series or buffer.
class BoundsError : public Error {
 public:
  explicit BoundsError(const std::string& what) : Error(Category::Config, what) {}
};

// Monthly spacing violated in an input series.
class CadenceError : public Error {
 public:
  explicit CadenceError(const std::string& what) : Error(Category::Config, what) {}
};

// Inconsistent configuration (e.g. series shorter than the horizon).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

// Operation invoked in the wrong lifecycle state.
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(Category::Config, what) {}
};

// Tensor dimensions do not chain.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(Category::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::Io, what) {}
};

// Non-finite loss or parameters during training.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(Category::Numerical, what) {}
};

}  // namespace traitfolio
