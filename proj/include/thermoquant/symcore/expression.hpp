#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermoquant/symcore/number.hpp"

namespace thermoquant::symcore {

/// Node kinds, listed in canonical ordering rank.
enum class Kind : std::uint8_t { constant = 0, symbol = 1, sum = 2, product = 3, power = 4, exp = 5 };

class Expr;

namespace detail {
struct Node;
}

/// Immutable symbolic expression. Every public constructor and operator returns
/// the canonical form: sums and products flattened, constants merged, like terms
/// collected, powers of identical bases combined, operands sorted. Negation is a
/// product with the constant -1. Structural equality of canonical forms is a
/// valid (sound but incomplete) zero test.
class Expr {
public:
  Expr();  // the constant 0
  Expr(int v);
  Expr(Rational r);
  Expr(Number n);

  static Expr symbol(std::string name);
  static Expr constant(double v) { return Expr(Number(v)); }

  Kind kind() const;
  bool is(Kind k) const { return kind() == k; }
  bool is_constant() const { return is(Kind::constant); }
  bool is_zero() const;
  bool is_one() const;

  /// Accessors; only meaningful for the matching kind.
  const Number& value() const;
  const std::string& name() const;
  std::span<const Expr> args() const;
  const Expr& base() const;          // power
  const Rational& exponent() const;  // power
  const Expr& arg() const;           // exp

  friend bool operator==(const Expr& a, const Expr& b);
  friend int compare(const Expr& a, const Expr& b);
  friend bool operator<(const Expr& a, const Expr& b) { return compare(a, b) < 0; }

  Expr operator-() const;
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

private:
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::Node> node_;

  friend Expr make_sum(std::vector<Expr> terms);
  friend Expr make_product(std::vector<Expr> factors);
  friend Expr pow(const Expr& base, const Rational& e);
  friend Expr exp(const Expr& a);
  friend struct detail::Node;
  friend Expr raw_node(Kind, std::vector<Expr>, Rational);
};

Expr make_sum(std::vector<Expr> terms);
Expr make_product(std::vector<Expr> factors);
Expr pow(const Expr& base, const Rational& e);
Expr exp(const Expr& a);
inline Expr sym(std::string name) { return Expr::symbol(std::move(name)); }

/// Canonical expanded form: products distributed over sums, small positive
/// integer powers of sums multiplied out. Idempotent.
Expr simplify(const Expr& e);
/// Distributes products over sums and multiplies out small positive integer
/// powers of sums, then canonicalizes.
Expr expand(const Expr& e);
/// Exact partial derivative with respect to the named symbol.
Expr differentiate(const Expr& e, std::string_view symbol);
/// Replaces every occurrence of `symbol` by `replacement` and canonicalizes.
Expr substitute(const Expr& e, std::string_view symbol, const Expr& replacement);
Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements);

std::set<std::string, std::less<>> free_symbols(const Expr& e);
bool depends_on(const Expr& e, std::string_view symbol);

/// Splits a canonical term into numeric coefficient and remaining factor.
std::pair<Number, Expr> split_coefficient(const Expr& term);
/// Returns the additive terms of e (a single element unless e is a sum).
std::vector<Expr> terms_of(const Expr& e);

/// Polynomial view of `e` in the given variables: exponent vector -> coefficient.
/// Throws NonPolynomial if a variable appears other than as a non-negative
/// integer power factor of an expanded term.
using Monomial = std::vector<int>;
std::map<Monomial, Expr> collect(const Expr& e, std::span<const std::string> vars);

/// Infix text in the grammar accepted by `parse`.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

}  // namespace thermoquant::symcore
