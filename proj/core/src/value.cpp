#include "bagcheck/value.hpp"

#include "bagcheck/ir.hpp"

namespace bagcheck {

Value Value::string(std::string text) {
  Rational code(string_code(text));
  return Value(Kind::Str, code, std::move(text));
}

Value Value::of_type(SqlType type, Rational v) {
  if (type == SqlType::Decimal) return decimal(v);
  return Value(Kind::Int, Rational(v.trunc()));
}

std::string Value::to_string() const {
  switch (kind_) {
    case Kind::Null:
      return "NULL";
    case Kind::Int:
    case Kind::Dec:
      return number_.to_string();
    case Kind::Bool:
      return number_.is_zero() ? "FALSE" : "TRUE";
    case Kind::Str:
      return "'" + text_ + "'";
  }
  return "?";
}

bool operator==(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
  return a.number_ == b.number_;
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return b.is_null() <=> a.is_null();
  return a.number_ <=> b.number_;
}

std::string to_string(const Row& row) {
  std::string out = "(";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ", ";
    out += row[i].to_string();
  }
  return out + ")";
}

}  // namespace bagcheck
