#include "thermoquant/symcore/number.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace thermoquant::symcore {

namespace {

using i128 = __int128;

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();

std::optional<Rational> reduce(i128 num, i128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

Rational must(std::optional<Rational> r, const char* op) {
  if (!r) throw std::overflow_error(std::string("rational overflow in ") + op);
  return *r;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

std::optional<Rational> Rational::checked_add(const Rational& a, const Rational& b) {
  return reduce(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}

std::optional<Rational> Rational::checked_mul(const Rational& a, const Rational& b) {
  return reduce(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
}

std::optional<Rational> Rational::checked_pow(const Rational& a, std::int64_t e) {
  if (e == 0) return Rational(1);
  if (a.is_zero()) {
    if (e < 0) return std::nullopt;
    return Rational(0);
  }
  Rational base = e < 0 ? a.reciprocal() : a;
  std::int64_t n = e < 0 ? -e : e;
  Rational acc(1);
  for (std::int64_t i = 0; i < n; ++i) {
    auto next = checked_mul(acc, base);
    if (!next) return std::nullopt;
    acc = *next;
  }
  return acc;
}

Rational Rational::reciprocal() const {
  if (num_ == 0) throw std::domain_error("reciprocal of zero");
  return Rational(den_, num_);
}

int compare(const Rational& a, const Rational& b) {
  i128 l = i128(a.num_) * b.den_;
  i128 r = i128(b.num_) * a.den_;
  return l < r ? -1 : (l > r ? 1 : 0);
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return must(Rational::checked_add(a, b), "+");
}
Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
Rational operator*(const Rational& a, const Rational& b) {
  return must(Rational::checked_mul(a, b), "*");
}
Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }

Number::Number(double d) : exact_(false), d_(d) {}

Number Number::operator-() const { return exact_ ? Number(-r_) : Number(-d_); }

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = Rational::checked_add(a.r_, b.r_)) return Number(*r);
  }
  return Number(a.to_double() + b.to_double());
}

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = Rational::checked_mul(a.r_, b.r_)) return Number(*r);
  }
  // 0 * float stays an exact zero so that cancellation is structural.
  if ((a.exact_ && a.r_.is_zero()) || (b.exact_ && b.r_.is_zero())) return Number(Rational(0));
  return Number(a.to_double() * b.to_double());
}

namespace {

// Exact integer k-th root of v >= 0, if any.
std::optional<std::int64_t> exact_root(std::int64_t v, std::int64_t k) {
  if (v < 0) return std::nullopt;
  if (v <= 1) return v;
  auto guess = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(v), 1.0 / k)));
  for (std::int64_t c = std::max<std::int64_t>(0, guess - 1); c <= guess + 1; ++c) {
    i128 acc = 1;
    bool over = false;
    for (std::int64_t i = 0; i < k; ++i) {
      acc *= c;
      if (acc > kMax) {
        over = true;
        break;
      }
    }
    if (!over && acc == v) return c;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Number> Number::pow(const Number& a, const Rational& e) {
  if (!a.exact_) {
    if (a.d_ < 0 && !e.is_integer()) return std::nullopt;
    return Number(std::pow(a.d_, e.to_double()));
  }
  if (e.is_integer()) {
    if (auto r = Rational::checked_pow(a.r_, e.num())) return Number(*r);
    return std::nullopt;
  }
  // Perfect powers only, e.g. (8/27)^(1/3) = 2/3; positive bases only.
  if (a.r_.is_negative()) return std::nullopt;
  auto n = exact_root(a.r_.num(), e.den());
  auto d = exact_root(a.r_.den(), e.den());
  if (!n || !d || *n == 0) return std::nullopt;
  if (auto r = Rational::checked_pow(Rational(*n, *d), e.num())) return Number(*r);
  return std::nullopt;
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact_ != b.exact_) return false;
  return a.exact_ ? a.r_ == b.r_ : a.d_ == b.d_;
}

int compare(const Number& a, const Number& b) {
  // Exact constants sort before floats so that the order is total.
  if (a.exact_ != b.exact_) return a.exact_ ? -1 : 1;
  if (a.exact_) return compare(a.r_, b.r_);
  return a.d_ < b.d_ ? -1 : (a.d_ > b.d_ ? 1 : 0);
}

std::string Number::str() const {
  if (exact_) return r_.str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d_);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace thermoquant::symcore
