#include "thermoquant/symcore/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "thermoquant/errors.hpp"

namespace thermoquant::symcore {

namespace {

double real_power(double base, const Rational& r) {
  if (r.is_integer()) {
    if (base == 0.0 && r.is_negative()) throw DomainError("zero raised to a negative power");
    return std::pow(base, static_cast<double>(r.num()));
  }
  if (base < 0.0) throw DomainError("negative base with non-integer exponent " + r.str());
  if (base == 0.0 && r.is_negative()) throw DomainError("zero raised to a negative power");
  return std::pow(base, r.to_double());
}

double eval_real(const Expr& e, const RealBinding& b) {
  switch (e.kind()) {
    case Kind::constant:
      return e.value().to_double();
    case Kind::symbol: {
      auto it = b.find(e.name());
      if (it == b.end()) throw UnboundSymbol(e.name());
      return it->second;
    }
    case Kind::sum: {
      double s = 0;
      for (const auto& a : e.args()) s += eval_real(a, b);
      return s;
    }
    case Kind::product: {
      double s = 1;
      for (const auto& a : e.args()) s *= eval_real(a, b);
      return s;
    }
    case Kind::power:
      return real_power(eval_real(e.base(), b), e.exponent());
    case Kind::exp:
      return std::exp(eval_real(e.arg(), b));
  }
  return 0;
}

Complex eval_complex(const Expr& e, const Binding& b) {
  switch (e.kind()) {
    case Kind::constant:
      return e.value().to_double();
    case Kind::symbol: {
      auto it = b.find(e.name());
      if (it == b.end()) throw UnboundSymbol(e.name());
      return it->second;
    }
    case Kind::sum: {
      Complex s = 0;
      for (const auto& a : e.args()) s += eval_complex(a, b);
      return s;
    }
    case Kind::product: {
      Complex s = 1;
      for (const auto& a : e.args()) s *= eval_complex(a, b);
      return s;
    }
    case Kind::power: {
      Complex base = eval_complex(e.base(), b);
      const Rational& r = e.exponent();
      if (base.imag() == 0.0) return real_power(base.real(), r);
      if (r.is_integer()) return std::pow(base, static_cast<int>(r.num()));
      return std::pow(base, r.to_double());
    }
    case Kind::exp:
      return std::exp(eval_complex(e.arg(), b));
  }
  return 0;
}

}  // namespace

Complex evaluate(const Expr& e, const Binding& b) {
  bool real = std::all_of(b.begin(), b.end(), [](const auto& kv) { return kv.second.imag() == 0.0; });
  if (real) {
    RealBinding rb;
    for (const auto& [k, v] : b) rb.emplace(k, v.real());
    return {eval_real(e, rb), 0.0};
  }
  return eval_complex(e, b);
}

double evaluate_real(const Expr& e, const RealBinding& b) { return eval_real(e, b); }

CompiledExpr::CompiledExpr(const Expr& e, std::vector<std::string> slots, const RealBinding& params)
    : slots_(std::move(slots)) {
  emit(e, params);
  // Stack depth bound: every op pushes at most one value.
  depth_ = ops_.size();
}

void CompiledExpr::emit(const Expr& e, const RealBinding& params) {
  switch (e.kind()) {
    case Kind::constant:
      ops_.push_back({Op::push, e.value().to_double(), 0});
      return;
    case Kind::symbol: {
      auto it = std::find(slots_.begin(), slots_.end(), e.name());
      if (it != slots_.end()) {
        ops_.push_back({Op::slot, 0, static_cast<int>(it - slots_.begin())});
        return;
      }
      auto p = params.find(e.name());
      if (p == params.end()) throw UnboundSymbol(e.name());
      ops_.push_back({Op::push, p->second, 0});
      return;
    }
    case Kind::sum:
    case Kind::product:
      for (const auto& a : e.args()) emit(a, params);
      ops_.push_back({e.is(Kind::sum) ? Op::add : Op::mul, 0, static_cast<int>(e.args().size())});
      return;
    case Kind::power:
      emit(e.base(), params);
      if (e.exponent().is_integer()) {
        ops_.push_back({Op::pow_int, 0, static_cast<int>(e.exponent().num())});
      } else {
        ops_.push_back({Op::pow_real, e.exponent().to_double(), 0});
      }
      return;
    case Kind::exp:
      emit(e.arg(), params);
      ops_.push_back({Op::exp, 0, 0});
      return;
  }
}

double CompiledExpr::operator()(std::span<const double> v) const {
  if (ops_.empty()) return 0.0;
  double small[64];
  std::vector<double> big;
  double* st = small;
  if (depth_ > 64) {
    big.resize(depth_);
    st = big.data();
  }
  std::size_t top = 0;
  for (const auto& op : ops_) {
    switch (op.code) {
      case Op::push:
        st[top++] = op.value;
        break;
      case Op::slot:
        st[top++] = v[static_cast<std::size_t>(op.n)];
        break;
      case Op::add: {
        double s = 0;
        for (int k = 0; k < op.n; ++k) s += st[--top];
        st[top++] = s;
        break;
      }
      case Op::mul: {
        double s = 1;
        for (int k = 0; k < op.n; ++k) s *= st[--top];
        st[top++] = s;
        break;
      }
      case Op::pow_int: {
        double b = st[top - 1];
        if (b == 0.0 && op.n < 0) throw DomainError("zero raised to a negative power");
        st[top - 1] = std::pow(b, static_cast<double>(op.n));
        break;
      }
      case Op::pow_real: {
        double b = st[top - 1];
        if (b < 0.0 || (b == 0.0 && op.value < 0)) {
          throw DomainError("negative base with non-integer exponent");
        }
        st[top - 1] = std::pow(b, op.value);
        break;
      }
      case Op::exp:
        st[top - 1] = std::exp(st[top - 1]);
        break;
    }
  }
  return st[0];
}

}  // namespace thermoquant::symcore
