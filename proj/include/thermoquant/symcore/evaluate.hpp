#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "thermoquant/symcore/expression.hpp"

namespace thermoquant::symcore {

using Complex = std::complex<double>;
using Binding = std::map<std::string, Complex, std::less<>>;
using RealBinding = std::map<std::string, double, std::less<>>;

/// Throws UnboundSymbol, DomainError. Real bindings on real trees give an
/// exactly zero imaginary part.
Complex evaluate(const Expr& e, const Binding& b);
double evaluate_real(const Expr& e, const RealBinding& b);

/// Postfix program for fast repeated real evaluation. Symbols listed in
/// `slots` are read from the argument span; any other symbol is looked up once
/// in `params` at compile time.
class CompiledExpr {
public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::vector<std::string> slots, const RealBinding& params);

  double operator()(std::span<const double> slot_values) const;
  double operator()(double a, double b) const {
    const double v[2] = {a, b};
    return (*this)(std::span<const double>(v, 2));
  }
  bool is_constant() const { return ops_.size() == 1 && ops_[0].code == Op::push; }

private:
  struct Op {
    enum Code : unsigned char { push, slot, add, mul, pow_int, pow_real, exp } code;
    double value = 0;
    int n = 0;
  };
  void emit(const Expr& e, const RealBinding& params);
  std::vector<std::string> slots_;
  std::vector<Op> ops_;
  std::size_t depth_ = 0;
};

}  // namespace thermoquant::symcore
