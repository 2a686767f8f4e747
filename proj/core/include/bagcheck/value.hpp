#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/number.hpp"

namespace bagcheck {

/// A concrete SQL value. Strings carry their integer code, which is what
/// comparisons use, and keep their text for display.
class Value {
 public:
  enum class Kind { Null, Int, Dec, Bool, Str };

  Value() = default;
  static Value null() { return {}; }
  static Value integer(std::int64_t v) { return Value(Kind::Int, Rational(v)); }
  static Value decimal(Rational v) { return Value(Kind::Dec, v); }
  static Value boolean(bool v) { return Value(Kind::Bool, Rational(v ? 1 : 0)); }
  static Value string(std::string text);
  /// Value of a numeric result with the given static type.
  static Value of_type(SqlType type, Rational v);

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::Null; }
  /// Numeric image used by comparisons and arithmetic (booleans are 0/1).
  const Rational& number() const { return number_; }
  const std::string& text() const { return text_; }

  std::string to_string() const;

  /// Grouping equality: NULL equals NULL, otherwise numeric equality.
  friend bool operator==(const Value& a, const Value& b);
  /// Total order consistent with ==; NULL sorts first.
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  Value(Kind kind, Rational number, std::string text = {}) : kind_(kind), number_(number), text_(std::move(text)) {}

  Kind kind_ = Kind::Null;
  Rational number_;
  std::string text_;
};

using Row = std::vector<Value>;

std::string to_string(const Row& row);

}  // namespace bagcheck
