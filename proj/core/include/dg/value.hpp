#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include "dg/number.hpp"

namespace dg {

/// A grounded parameter component. Discrete spaces (integers, bounded
/// integers, enumeration indices, OIDs) hold an int64; real spaces hold a
/// double that is keyed bitwise.
class Value {
 public:
  constexpr Value() : v_(std::int64_t{0}) {}
  constexpr explicit Value(std::int64_t i) : v_(i) {}
  constexpr explicit Value(double d) : v_(d) {}

  static constexpr Value integer(std::int64_t i) { return Value(i); }
  static constexpr Value real(double d) { return Value(d); }

  bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  double to_double() const {
    return is_integer() ? static_cast<double>(as_integer()) : as_real();
  }
  Number to_number() const {
    return is_integer() ? Number::rational(as_integer()) : Number::real(as_real());
  }

  friend bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }
  friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return a.v_.index() <=> b.v_.index();
    if (a.is_integer()) return a.as_integer() <=> b.as_integer();
    const double x = a.as_real();
    const double y = b.as_real();
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::bit_cast<std::uint64_t>(x) <=> std::bit_cast<std::uint64_t>(y);
  }

  std::size_t hash() const {
    return is_integer() ? std::hash<std::int64_t>{}(as_integer())
                        : std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(as_real())) * 31u;
  }

 private:
  std::variant<std::int64_t, double> v_;
};

}  // namespace dg
