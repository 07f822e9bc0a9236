#include "dg/number.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numeric>

#include "dg/error.hpp"

namespace dg {
namespace {

bool reduce(std::int64_t& num, std::int64_t& den) {
  if (den == 0) return false;
  if (den < 0) {
    if (num == std::numeric_limits<std::int64_t>::min() ||
        den == std::numeric_limits<std::int64_t>::min())
      return false;
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return true;
}

// a*b/c style helpers with overflow detection through __int128.
bool fits(__int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

bool make_exact(__int128 num, __int128 den, Number& out) {
  if (den == 0) return false;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (!fits(num) || !fits(den)) return false;
  out = Number::rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
  return true;
}

}  // namespace

Number Number::rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorKind::DivisionByZero, "rational with zero denominator");
  Number n;
  if (!reduce(num, den)) return real(static_cast<double>(num) / static_cast<double>(den));
  n.exact_ = true;
  n.num_ = num;
  n.den_ = den;
  return n;
}

Number Number::real(double value) {
  Number n;
  n.exact_ = false;
  n.real_ = value;
  return n;
}

Number Number::parse(const std::string& text) {
  // mantissa digits, optional fraction, optional exponent
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  __int128 mantissa = 0;
  int scale = 0;
  bool overflow = false;
  bool any_digit = false;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    any_digit = true;
    mantissa = mantissa * 10 + (text[i] - '0');
    if (mantissa > (static_cast<__int128>(1) << 100)) overflow = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      any_digit = true;
      mantissa = mantissa * 10 + (text[i] - '0');
      --scale;
      if (mantissa > (static_cast<__int128>(1) << 100)) overflow = true;
    }
  }
  if (!any_digit) throw Error(ErrorKind::InvalidConstant, "malformed number '" + text + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    int exp_sign = 1;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) exp_sign = text[i++] == '-' ? -1 : 1;
    int e = 0;
    bool exp_digit = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      exp_digit = true;
      e = std::min(e * 10 + (text[i] - '0'), 100000);
    }
    if (!exp_digit) throw Error(ErrorKind::InvalidConstant, "malformed exponent in '" + text + "'");
    scale += exp_sign * e;
  }
  if (i != text.size()) throw Error(ErrorKind::InvalidConstant, "malformed number '" + text + "'");

  auto as_double = [&] {
    double v = std::strtod(text.c_str(), nullptr);
    return real(v);
  };
  if (overflow || scale > 18 || scale < -18) return as_double();
  __int128 num = negative ? -mantissa : mantissa;
  __int128 den = 1;
  for (int k = 0; k < scale; ++k) num *= 10;
  for (int k = 0; k < -scale; ++k) den *= 10;
  Number out;
  if (!make_exact(num, den, out)) return as_double();
  return out;
}

double Number::to_double() const {
  if (!exact_) return real_;
  if (den_ == 1) return static_cast<double>(num_);
  return static_cast<double>(num_) / static_cast<double>(den_);
}

bool Number::is_zero() const { return exact_ ? num_ == 0 : real_ == 0.0; }

bool Number::is_integer() const {
  if (exact_) return den_ == 1;
  return std::isfinite(real_) && std::floor(real_) == real_ &&
         std::fabs(real_) < 9.0e18;
}

std::int64_t Number::to_integer() const {
  if (exact_) return num_;
  return static_cast<std::int64_t>(real_);
}

int Number::sign() const {
  if (exact_) return (num_ > 0) - (num_ < 0);
  return (real_ > 0.0) - (real_ < 0.0);
}

Number Number::operator-() const {
  if (exact_ && num_ != std::numeric_limits<std::int64_t>::min()) return rational(-num_, den_);
  return real(-to_double());
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    Number out;
    if (a.den_ == b.den_) {
      if (make_exact(static_cast<__int128>(a.num_) + b.num_, a.den_, out)) return out;
    } else {
      const __int128 num = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
      const __int128 den = static_cast<__int128>(a.den_) * b.den_;
      if (make_exact(num, den, out)) return out;
    }
  }
  return Number::real(a.to_double() + b.to_double());
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    Number out;
    if (make_exact(static_cast<__int128>(a.num_) * b.num_,
                   static_cast<__int128>(a.den_) * b.den_, out))
      return out;
  }
  return Number::real(a.to_double() * b.to_double());
}

Number operator/(const Number& a, const Number& b) {
  if (b.is_zero()) throw Error(ErrorKind::DivisionByZero, "division by zero");
  if (a.exact_ && b.exact_) {
    Number out;
    if (make_exact(static_cast<__int128>(a.num_) * b.den_,
                   static_cast<__int128>(a.den_) * b.num_, out))
      return out;
  }
  return Number::real(a.to_double() / b.to_double());
}

Number Number::pow(std::int64_t exponent) const {
  if (exponent < 0) return Number::rational(1) / pow(-exponent);
  Number result = Number::rational(1);
  Number base = *this;
  std::int64_t e = exponent;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

int compare(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return (l > r) - (l < r);
  }
  const double l = a.to_double();
  const double r = b.to_double();
  return (l > r) - (l < r);
}

std::string Number::str() const {
  if (exact_) {
    if (den_ == 1) return std::to_string(num_);
    // terminating decimals print as decimals, everything else as a quotient
    std::int64_t d = den_;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d == 1) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, to_double());
      std::string s(buf, res.ptr);
      Number back = parse(s);
      if (back.exact_ && back.num_ == num_ && back.den_ == den_) return s;
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, real_);
  std::string s(buf, res.ptr);
  return s;
}

}  // namespace dg
