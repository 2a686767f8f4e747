#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bagcheck {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed structured-text document (catalog, plan, database, manifest).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Catalog contents violate a schema invariant.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnknownTable : public Error {
 public:
  explicit UnknownTable(const std::string& name) : Error("unknown table: " + name), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// A plan failed validation; the message lists every violation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// SQL front-end failure.
class SqlError : public Error {
 public:
  enum class Kind { Syntax, Name, Unsupported };

  SqlError(Kind kind, std::string message, std::size_t position)
      : Error(prefix(kind) + message + " (at offset " + std::to_string(position) + ")"),
        kind_(kind),
        position_(position) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }

 private:
  static std::string prefix(Kind kind) {
    switch (kind) {
      case Kind::Syntax:
        return "syntax error: ";
      case Kind::Name:
        return "name error: ";
      case Kind::Unsupported:
        return "unsupported feature: ";
    }
    return "";
  }

  Kind kind_;
  std::size_t position_;
};

/// The solver process died, refused the script, or spoke an unexpected protocol.
/// Distinct from an `unknown` answer, which is a normal verdict.
class SolverCrash : public Error {
 public:
  using Error::Error;
};

/// Reference interpreter hit an invariant breach (unreachable after validation).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bagcheck
