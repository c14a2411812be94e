#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace thermoquant::symcore {

/// Exact rational with 64-bit numerator/denominator, always reduced and with a
/// positive denominator. Arithmetic that would overflow reports failure through
/// the `checked_*` helpers instead of wrapping.
class Rational {
public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  bool is_zero() const noexcept { return num_ == 0; }
  bool is_one() const noexcept { return num_ == 1 && den_ == 1; }
  bool is_integer() const noexcept { return den_ == 1; }
  bool is_negative() const noexcept { return num_ < 0; }
  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  static std::optional<Rational> checked_add(const Rational& a, const Rational& b);
  static std::optional<Rational> checked_mul(const Rational& a, const Rational& b);
  /// Integer power; nullopt on overflow or 0^negative.
  static std::optional<Rational> checked_pow(const Rational& a, std::int64_t e);

  Rational operator-() const { return Rational(-num_, den_); }
  Rational reciprocal() const;

  friend bool operator==(const Rational&, const Rational&) = default;
  friend int compare(const Rational& a, const Rational& b);

  std::string str() const;

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Overflow-checked operators used where overflow is a programming error.
Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
Rational operator/(const Rational& a, const Rational& b);

/// Leaf constant: exact rational, or a float admitted only as a leaf value.
class Number {
public:
  Number() = default;
  Number(Rational r) : exact_(true), r_(r) {}
  explicit Number(double d);
  static Number integer(std::int64_t v) { return Number(Rational(v)); }

  bool is_exact() const noexcept { return exact_; }
  const Rational& rational() const { return r_; }
  double to_double() const noexcept { return exact_ ? r_.to_double() : d_; }

  bool is_zero() const noexcept { return exact_ ? r_.is_zero() : d_ == 0.0; }
  bool is_one() const noexcept { return exact_ ? r_.is_one() : d_ == 1.0; }
  bool is_negative() const noexcept { return exact_ ? r_.is_negative() : d_ < 0.0; }

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  /// a^e with rational e; nullopt when the result is not representable as a
  /// leaf (fractional power of an exact rational that is not a perfect power).
  static std::optional<Number> pow(const Number& a, const Rational& e);

  friend bool operator==(const Number& a, const Number& b);
  friend int compare(const Number& a, const Number& b);

  std::string str() const;

private:
  bool exact_ = true;
  Rational r_{};
  double d_ = 0.0;
};

}  // namespace thermoquant::symcore
