#pragma once

#include <cstdint>
#include <string>

namespace dg {

/// Scalar of the rate language. Exact 64-bit rationals when every operand
/// is exact and nothing overflows, IEEE double otherwise.
class Number {
 public:
  constexpr Number() = default;

  static Number rational(std::int64_t num, std::int64_t den = 1);
  static Number real(double value);
  /// Parses a decimal literal ("12", "0.25", "1e-3"). Decimal literals are
  /// rationals; they fall back to doubles only when they do not fit.
  static Number parse(const std::string& text);

  bool exact() const { return exact_; }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const;
  bool is_zero() const;
  bool is_integer() const;
  /// Integral value. Precondition: is_integer().
  std::int64_t to_integer() const;
  int sign() const;

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  /// Throws Error(DivisionByZero) when b is zero.
  friend Number operator/(const Number& a, const Number& b);
  Number pow(std::int64_t exponent) const;

  /// Numerical comparison; exact when both sides are exact.
  friend int compare(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b) { return compare(a, b) == 0; }

  /// Shortest text that parses back to an equal Number.
  std::string str() const;

 private:
  bool exact_ = true;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double real_ = 0.0;
};

}  // namespace dg
