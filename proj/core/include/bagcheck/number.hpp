#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace bagcheck {

/// Exact rational with 64-bit numerator and denominator, always normalized
/// (gcd 1, positive denominator). Arithmetic throws std::overflow_error rather
/// than wrapping.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  bool is_integer() const noexcept { return den_ == 1; }
  bool is_zero() const noexcept { return num_ == 0; }
  int sign() const noexcept { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

  /// Truncation toward zero.
  std::int64_t trunc() const noexcept { return num_ / den_; }

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  /// Divisor must be nonzero.
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  /// Finite decimal expansion when one exists ("12.5", "-3"), otherwise "n/d".
  std::string to_string() const;
  /// Accepts "12", "-0.25", "3/4".
  static Rational parse(std::string_view text);

  std::size_t hash() const noexcept {
    return std::hash<std::int64_t>{}(num_) * 31u + std::hash<std::int64_t>{}(den_);
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace bagcheck
