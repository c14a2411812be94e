#include "thermoquant/symcore/bracket.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "thermoquant/errors.hpp"

namespace thermoquant::symcore {

SymbolTable SymbolTable::standard() {
  SymbolTable t;
  t.add_pair("tau", "pi");
  t.add_pair("q", "p");
  for (const char* n : {"kB", "bbar", "A", "a", "w", "K", "u0", "sigma", "xi", "C", "sigma_q",
                        "sigma_p"}) {
    t.add({n, Role::parameter, std::nullopt});
  }
  return t;
}

void SymbolTable::add(Symbol s) {
  if (find(s.name)) throw SchemaError("duplicate symbol '" + s.name + "'");
  symbols_.push_back(std::move(s));
}

void SymbolTable::add_pair(const std::string& coordinate, const std::string& momentum) {
  add({coordinate, Role::coordinate, momentum});
  add({momentum, Role::momentum, coordinate});
}

const Symbol* SymbolTable::find(std::string_view name) const {
  auto it = std::find_if(symbols_.begin(), symbols_.end(),
                         [&](const Symbol& s) { return s.name == name; });
  return it == symbols_.end() ? nullptr : &*it;
}

bool SymbolTable::consistent() const {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    for (std::size_t j = i + 1; j < symbols_.size(); ++j) {
      if (symbols_[i].name == symbols_[j].name) return false;
    }
    const auto& s = symbols_[i];
    if (!s.conjugate) continue;
    const Symbol* c = find(*s.conjugate);
    if (!c || c->conjugate != s.name) return false;
  }
  return true;
}

std::vector<CanonicalPair> standard_pairs() { return {{"tau", "pi"}, {"q", "p"}}; }

Expr poisson_bracket(const Expr& f, const Expr& g, const std::vector<CanonicalPair>& pairs) {
  std::vector<Expr> terms;
  for (const auto& pr : pairs) {
    terms.push_back(differentiate(f, pr.coordinate) * differentiate(g, pr.momentum));
    terms.push_back(-(differentiate(f, pr.momentum) * differentiate(g, pr.coordinate)));
  }
  return simplify(expand(make_sum(std::move(terms))));
}

ZeroTestResult zero_test(const Expr& e, const ZeroTestOptions& opt) {
  ZeroTestResult res;
  Expr s = simplify(expand(e));
  if (s.is_zero()) {
    res.status = ZeroStatus::exact_zero;
    return res;
  }
  auto syms = free_symbols(s);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int attempts = 0;
  bool nonzero = false;
  while (res.evaluated < opt.samples && attempts < 20 * opt.samples) {
    ++attempts;
    RealBinding b = opt.fixed;
    for (const auto& name : syms) {
      if (b.count(name)) continue;
      double lo = opt.lo;
      double hi = opt.hi;
      if (auto it = opt.ranges.find(name); it != opt.ranges.end()) {
        lo = it->second.first;
        hi = it->second.second;
      }
      b[name] = lo + (hi - lo) * unit(rng);
    }
    double v = 0;
    try {
      v = evaluate_real(s, b);
    } catch (const DomainError&) {
      continue;
    }
    ++res.evaluated;
    res.max_abs = std::max(res.max_abs, std::isfinite(v) ? std::abs(v) : HUGE_VAL);
    if (!(std::abs(v) < opt.tolerance)) nonzero = true;
  }
  res.status = (!nonzero && res.evaluated > 0) ? ZeroStatus::numeric_zero : ZeroStatus::nonzero;
  return res;
}

const char* to_string(ZeroStatus s) {
  switch (s) {
    case ZeroStatus::exact_zero:
      return "exact_zero";
    case ZeroStatus::numeric_zero:
      return "numeric_zero";
    case ZeroStatus::nonzero:
      return "nonzero";
  }
  return "nonzero";
}

}  // namespace thermoquant::symcore
