#include "thermoquant/symcore/expression.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "thermoquant/errors.hpp"

namespace thermoquant::symcore {

namespace detail {

struct Node {
  Kind kind = Kind::constant;
  Number value{};
  std::string name;
  std::vector<Expr> args;
  Rational exponent{};
};

}  // namespace detail

using detail::Node;

Expr raw_node(Kind kind, std::vector<Expr> args, Rational exponent) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = std::move(args);
  n->exponent = exponent;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

namespace {

std::shared_ptr<const Node> constant_node(Number v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->value = v;
  return n;
}

const std::shared_ptr<const Node>& zero_node() {
  static const auto z = constant_node(Number(Rational(0)));
  return z;
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}
Expr::Expr(int v) : Expr(Number(Rational(v))) {}
Expr::Expr(Rational r) : Expr(Number(r)) {}
Expr::Expr(Number n) : node_(constant_node(n)) {}

Expr Expr::symbol(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::symbol;
  n->name = std::move(name);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Kind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return is_constant() && node_->value.is_zero(); }
bool Expr::is_one() const { return is_constant() && node_->value.is_one(); }
const Number& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::span<const Expr> Expr::args() const { return node_->args; }
const Expr& Expr::base() const { return node_->args.at(0); }
const Rational& Expr::exponent() const { return node_->exponent; }
const Expr& Expr::arg() const { return node_->args.at(0); }

int compare(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case Kind::constant:
      return compare(a.value(), b.value());
    case Kind::symbol:
      return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case Kind::sum:
    case Kind::product: {
      auto x = a.args();
      auto y = b.args();
      std::size_t n = std::min(x.size(), y.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare(x[i], y[i]); c != 0) return c;
      }
      return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
    }
    case Kind::power: {
      if (int c = compare(a.base(), b.base()); c != 0) return c;
      return compare(a.exponent(), b.exponent());
    }
    case Kind::exp:
      return compare(a.arg(), b.arg());
  }
  return 0;
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

std::pair<Number, Expr> split_coefficient(const Expr& term) {
  if (term.is_constant()) return {term.value(), Expr(1)};
  if (term.is(Kind::product) && term.args()[0].is_constant()) {
    auto args = term.args();
    Number c = args[0].value();
    if (args.size() == 2) return {c, args[1]};
    return {c, raw_node(Kind::product, std::vector<Expr>(args.begin() + 1, args.end()), {})};
  }
  return {Number(Rational(1)), term};
}

std::vector<Expr> terms_of(const Expr& e) {
  if (e.is(Kind::sum)) return {e.args().begin(), e.args().end()};
  return {e};
}

namespace {

// coefficient * rest where rest is canonical and has no numeric coefficient.
Expr scale_term(const Number& c, const Expr& rest) {
  if (c.is_zero()) return Expr(0);
  if (rest.is_one()) return Expr(c);
  if (c.is_one()) return rest;
  std::vector<Expr> f;
  f.emplace_back(c);
  if (rest.is(Kind::product)) {
    f.insert(f.end(), rest.args().begin(), rest.args().end());
  } else {
    f.push_back(rest);
  }
  return raw_node(Kind::product, std::move(f), {});
}

// Coefficient of the term whose coefficient-free part is smallest; stable
// under rescaling the sum.
Number leading_coefficient(const Expr& sum) {
  Number best_c(Rational(1));
  Expr best_rest;
  bool first = true;
  for (const auto& t : sum.args()) {
    auto [c, rest] = split_coefficient(t);
    if (first || compare(rest, best_rest) < 0) {
      best_c = c;
      best_rest = rest;
      first = false;
    }
  }
  return best_c;
}

}  // namespace

Expr make_sum(std::vector<Expr> terms) {
  // Flatten.
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (auto& t : terms) {
    if (t.is(Kind::sum)) {
      flat.insert(flat.end(), t.args().begin(), t.args().end());
    } else {
      flat.push_back(std::move(t));
    }
  }
  Number constant(Rational(0));
  std::vector<std::pair<Expr, Number>> collected;  // rest -> coefficient
  for (const auto& t : flat) {
    if (t.is_constant()) {
      constant = constant + t.value();
      continue;
    }
    auto [c, rest] = split_coefficient(t);
    auto it = std::find_if(collected.begin(), collected.end(),
                           [&](const auto& p) { return p.first == rest; });
    if (it == collected.end()) {
      collected.emplace_back(rest, c);
    } else {
      it->second = it->second + c;
    }
  }
  std::vector<Expr> out;
  for (const auto& [rest, c] : collected) {
    if (c.is_zero()) continue;
    out.push_back(scale_term(c, rest));
  }
  std::sort(out.begin(), out.end());
  if (!constant.is_zero()) out.insert(out.begin(), Expr(constant));
  if (out.empty()) return Expr(0);
  if (out.size() == 1) return out.front();
  return raw_node(Kind::sum, std::move(out), {});
}

Expr make_product(std::vector<Expr> factors) {
  Number coeff(Rational(1));
  std::vector<Expr> exp_args;
  std::vector<std::pair<Expr, Rational>> bases;

  std::vector<Expr> work = std::move(factors);
  for (int guard = 0; !work.empty() && guard < 64; ++guard) {
    std::vector<Expr> pending;
    for (auto& f : work) {
      switch (f.kind()) {
        case Kind::constant:
          coeff = coeff * f.value();
          break;
        case Kind::product:
          pending.insert(pending.end(), f.args().begin(), f.args().end());
          break;
        case Kind::exp:
          exp_args.push_back(f.arg());
          break;
        default: {
          Expr b = f.is(Kind::power) ? f.base() : f;
          Rational e = f.is(Kind::power) ? f.exponent() : Rational(1);
          if (b.is(Kind::sum) && e.is_integer()) {
            // Pull the exact leading coefficient out of sum factors so that
            // c*(x + y)*(z + w) has a unique representation.
            Number c0 = leading_coefficient(b);
            if (c0.is_exact() && !c0.is_one()) {
              if (auto ce = Number::pow(c0, e)) {
                Number inv(c0.rational().reciprocal());
                std::vector<Expr> t;
                for (const auto& x : b.args()) t.push_back(make_product({Expr(inv), x}));
                b = make_sum(std::move(t));
                coeff = coeff * *ce;
              }
            }
          }
          auto it = std::find_if(bases.begin(), bases.end(),
                                 [&](const auto& p) { return p.first == b; });
          if (it == bases.end()) {
            bases.emplace_back(b, e);
          } else {
            it->second = it->second + e;
          }
        }
      }
    }
    work = std::move(pending);
  }
  if (coeff.is_zero()) return Expr(0);

  std::vector<Expr> out;
  for (const auto& [b, e] : bases) {
    if (e.is_zero()) continue;
    Expr p = pow(b, e);
    if (p.is_constant()) {
      coeff = coeff * p.value();
    } else if (p.is(Kind::product)) {
      // Only reachable for non-canonical inputs; fold the pieces back in.
      for (const auto& f : p.args()) {
        if (f.is_constant()) {
          coeff = coeff * f.value();
        } else {
          out.push_back(f);
        }
      }
    } else if (p.is(Kind::exp)) {
      exp_args.push_back(p.arg());
    } else {
      out.push_back(p);
    }
  }
  if (!exp_args.empty()) {
    Expr e = exp(make_sum(std::move(exp_args)));
    if (e.is_constant()) {
      coeff = coeff * e.value();
    } else {
      out.push_back(e);
    }
  }
  if (coeff.is_zero()) return Expr(0);
  std::sort(out.begin(), out.end());
  if (out.empty()) return Expr(coeff);
  if (out.size() == 1 && coeff.is_one()) return out.front();
  if (out.size() == 1 && out.front().is(Kind::sum)) {
    // A numeric multiple of a sum distributes so that negation cancels terms.
    std::vector<Expr> t;
    for (const auto& x : out.front().args()) t.push_back(make_product({Expr(coeff), x}));
    return make_sum(std::move(t));
  }
  if (!coeff.is_one()) out.insert(out.begin(), Expr(coeff));
  return raw_node(Kind::product, std::move(out), {});
}

Expr pow(const Expr& base, const Rational& e) {
  if (e.is_zero()) return Expr(1);
  if (e.is_one()) return base;
  switch (base.kind()) {
    case Kind::constant: {
      if (auto v = Number::pow(base.value(), e)) return Expr(*v);
      break;
    }
    case Kind::power:
      if (e.is_integer()) return pow(base.base(), base.exponent() * e);
      break;
    case Kind::product:
      if (e.is_integer()) {
        std::vector<Expr> f;
        for (const auto& x : base.args()) f.push_back(pow(x, e));
        return make_product(std::move(f));
      }
      break;
    case Kind::exp:
      return exp(Expr(e) * base.arg());
    default:
      break;
  }
  return raw_node(Kind::power, {base}, e);
}

Expr exp(const Expr& a) {
  if (a.is_zero()) return Expr(1);
  if (a.is_constant() && !a.value().is_exact()) return Expr(Number(std::exp(a.value().to_double())));
  return raw_node(Kind::exp, {a}, {});
}

Expr Expr::operator-() const { return make_product({Expr(-1), *this}); }
Expr operator+(const Expr& a, const Expr& b) { return make_sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return make_sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) { return make_product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return make_product({a, pow(b, Rational(-1))}); }

Expr expand(const Expr& e);

namespace {

std::vector<Expr> factors_of(const Expr& t) {
  if (t.is(Kind::product)) return {t.args().begin(), t.args().end()};
  return {t};
}

// Recombines x*S^r + y*S^r + ... into c*S^(r+1) when the cofactors add up to a
// multiple c of the sum S, e.g. q*(q - w)^(-5/3) - w*(q - w)^(-5/3).
bool absorb_once(Expr& e) {
  auto terms = terms_of(e);
  std::vector<Expr> candidates;
  for (const auto& t : terms) {
    for (const auto& f : factors_of(t)) {
      if (!f.is(Kind::power) || !f.base().is(Kind::sum)) continue;
      Rational next = f.exponent() + Rational(1);
      if (next.is_integer() && next.num() > 0) continue;
      if (std::find(candidates.begin(), candidates.end(), f) == candidates.end()) {
        candidates.push_back(f);
      }
    }
  }
  for (const auto& F : candidates) {
    const Expr& B = F.base();
    std::vector<Expr> with, without, quotients;
    for (const auto& t : terms) {
      auto fs = factors_of(t);
      auto it = std::find(fs.begin(), fs.end(), F);
      if (it == fs.end()) {
        without.push_back(t);
        continue;
      }
      with.push_back(t);
      fs.erase(it);
      quotients.push_back(make_product(std::move(fs)));
    }
    if (with.size() < B.args().size()) continue;
    Expr qsum = make_sum(quotients);
    auto qterms = terms_of(qsum);
    auto bterms = B.args();
    for (const auto& qi : qterms) {
      Expr c = expand(qi * pow(bterms[0], Rational(-1)));
      if (c.is(Kind::sum)) continue;
      bool all = true;
      for (const auto& bj : bterms) {
        Expr want = expand(c * bj);
        if (std::find(qterms.begin(), qterms.end(), want) == qterms.end()) {
          all = false;
          break;
        }
      }
      if (!all) continue;
      Expr rest = expand(qsum - expand(c * B));
      std::vector<Expr> out = without;
      out.push_back(expand(rest * F));
      out.push_back(c * pow(B, F.exponent() + Rational(1)));
      e = make_sum(std::move(out));
      return true;
    }
  }
  return false;
}

}  // namespace

Expr simplify(const Expr& e) {
  Expr x = expand(e);
  for (int guard = 0; guard < 64 && x.is(Kind::sum) && absorb_once(x); ++guard) {
  }
  return x;
}

namespace {

constexpr std::int64_t kMaxExpandPower = 8;

Expr distribute(std::span<const Expr> factors) {
  std::vector<Expr> acc{Expr(1)};
  for (const auto& f : factors) {
    std::vector<Expr> next;
    auto parts = terms_of(f);
    next.reserve(acc.size() * parts.size());
    for (const auto& a : acc) {
      for (const auto& p : parts) next.push_back(a * p);
    }
    acc = std::move(next);
  }
  return make_sum(std::move(acc));
}

}  // namespace

Expr expand(const Expr& e) {
  switch (e.kind()) {
    case Kind::constant:
    case Kind::symbol:
      return e;
    case Kind::sum: {
      std::vector<Expr> t;
      for (const auto& x : e.args()) t.push_back(expand(x));
      return make_sum(std::move(t));
    }
    case Kind::product: {
      std::vector<Expr> t;
      for (const auto& x : e.args()) t.push_back(expand(x));
      // Re-canonicalize first: expanded factors may have merged.
      Expr p = make_product(t);
      if (!p.is(Kind::product)) return p.is(Kind::sum) ? p : expand(p);
      auto args = p.args();
      auto sum_base = [](const Expr& f) -> const Expr* {
        if (f.is(Kind::sum)) return &f;
        if (f.is(Kind::power) && f.base().is(Kind::sum) && f.exponent().is_integer() &&
            f.exponent().num() > 0 && f.exponent().num() <= kMaxExpandPower) {
          return &f.base();
        }
        return nullptr;
      };
      auto base_of = [](const Expr& f) -> const Expr& { return f.is(Kind::power) ? f.base() : f; };
      // Distribute first over a sum whose terms share a base with another
      // factor, so that powers merge before the remaining sums are split.
      std::ptrdiff_t pick = -1;
      for (std::size_t k = 0; k < args.size(); ++k) {
        const Expr* sb = sum_base(args[k]);
        if (!sb) continue;
        if (pick < 0) pick = static_cast<std::ptrdiff_t>(k);
        bool shares = false;
        for (const auto& term : sb->args()) {
          auto tf = term.is(Kind::product) ? std::vector<Expr>(term.args().begin(), term.args().end())
                                           : std::vector<Expr>{term};
          for (const auto& x : tf) {
            for (std::size_t j = 0; j < args.size() && !shares; ++j) {
              if (j != k && !args[j].is_constant() && base_of(x) == base_of(args[j])) shares = true;
            }
          }
        }
        if (shares) {
          pick = static_cast<std::ptrdiff_t>(k);
          break;
        }
      }
      if (pick < 0) return p;
      const Expr& chosen = args[static_cast<std::size_t>(pick)];
      const Expr& S = *sum_base(chosen);
      std::vector<Expr> others;
      for (std::size_t j = 0; j < args.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) != pick) others.push_back(args[j]);
      }
      if (chosen.is(Kind::power)) others.push_back(pow(S, chosen.exponent() - Rational(1)));
      std::vector<Expr> out;
      for (const auto& term : S.args()) {
        std::vector<Expr> f = others;
        f.push_back(term);
        out.push_back(expand(make_product(std::move(f))));
      }
      return make_sum(std::move(out));
    }
    case Kind::power: {
      Expr b = expand(e.base());
      const Rational& r = e.exponent();
      if (b.is(Kind::sum) && r.is_integer() && r.num() > 0 && r.num() <= kMaxExpandPower) {
        std::vector<Expr> fs(static_cast<std::size_t>(r.num()), b);
        return distribute(fs);
      }
      Expr p = pow(b, r);
      if (p.is(Kind::product)) return expand(p);
      return p;
    }
    case Kind::exp:
      return exp(expand(e.arg()));
  }
  return e;
}

bool depends_on(const Expr& e, std::string_view symbol) {
  switch (e.kind()) {
    case Kind::constant:
      return false;
    case Kind::symbol:
      return e.name() == symbol;
    default:
      for (const auto& a : e.args()) {
        if (depends_on(a, symbol)) return true;
      }
      return false;
  }
}

Expr differentiate(const Expr& e, std::string_view s) {
  if (!depends_on(e, s)) return Expr(0);
  switch (e.kind()) {
    case Kind::constant:
      return Expr(0);
    case Kind::symbol:
      return Expr(1);
    case Kind::sum: {
      std::vector<Expr> t;
      for (const auto& x : e.args()) t.push_back(differentiate(x, s));
      return make_sum(std::move(t));
    }
    case Kind::product: {
      auto f = e.args();
      std::vector<Expr> t;
      for (std::size_t i = 0; i < f.size(); ++i) {
        Expr d = differentiate(f[i], s);
        if (d.is_zero()) continue;
        std::vector<Expr> prod{d};
        for (std::size_t j = 0; j < f.size(); ++j) {
          if (j != i) prod.push_back(f[j]);
        }
        t.push_back(make_product(std::move(prod)));
      }
      return make_sum(std::move(t));
    }
    case Kind::power: {
      const Rational& r = e.exponent();
      return make_product({Expr(r), pow(e.base(), r - Rational(1)), differentiate(e.base(), s)});
    }
    case Kind::exp:
      return e * differentiate(e.arg(), s);
  }
  return Expr(0);
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& rep) {
  switch (e.kind()) {
    case Kind::constant:
      return e;
    case Kind::symbol: {
      auto it = rep.find(e.name());
      return it == rep.end() ? e : it->second;
    }
    case Kind::sum: {
      std::vector<Expr> t;
      for (const auto& x : e.args()) t.push_back(substitute(x, rep));
      return make_sum(std::move(t));
    }
    case Kind::product: {
      std::vector<Expr> t;
      for (const auto& x : e.args()) t.push_back(substitute(x, rep));
      return make_product(std::move(t));
    }
    case Kind::power:
      return pow(substitute(e.base(), rep), e.exponent());
    case Kind::exp:
      return exp(substitute(e.arg(), rep));
  }
  return e;
}

Expr substitute(const Expr& e, std::string_view symbol, const Expr& replacement) {
  std::map<std::string, Expr, std::less<>> rep;
  rep.emplace(std::string(symbol), replacement);
  return substitute(e, rep);
}

namespace {

void gather_symbols(const Expr& e, std::set<std::string, std::less<>>& out) {
  if (e.is(Kind::symbol)) {
    out.insert(e.name());
    return;
  }
  if (e.is_constant()) return;
  for (const auto& a : e.args()) gather_symbols(a, out);
}

}  // namespace

std::set<std::string, std::less<>> free_symbols(const Expr& e) {
  std::set<std::string, std::less<>> out;
  gather_symbols(e, out);
  return out;
}

std::map<Monomial, Expr> collect(const Expr& e, std::span<const std::string> vars) {
  auto index_of = [&](const Expr& x) -> int {
    if (!x.is(Kind::symbol)) return -1;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i] == x.name()) return static_cast<int>(i);
    }
    return -1;
  };
  auto mentions_var = [&](const Expr& x) {
    return std::any_of(vars.begin(), vars.end(),
                       [&](const std::string& v) { return depends_on(x, v); });
  };

  std::map<Monomial, std::vector<Expr>> parts;
  for (const auto& term : terms_of(expand(e))) {
    Monomial deg(vars.size(), 0);
    std::vector<Expr> coeff;
    std::vector<Expr> factors =
        term.is(Kind::product) ? std::vector<Expr>(term.args().begin(), term.args().end())
                               : std::vector<Expr>{term};
    for (const auto& f : factors) {
      if (int i = index_of(f); i >= 0) {
        deg[static_cast<std::size_t>(i)] += 1;
      } else if (f.is(Kind::power) && index_of(f.base()) >= 0 && f.exponent().is_integer() &&
                 f.exponent().num() > 0) {
        deg[static_cast<std::size_t>(index_of(f.base()))] += static_cast<int>(f.exponent().num());
      } else if (mentions_var(f)) {
        throw NonPolynomial("term " + to_string(term) + " is not polynomial in the momenta");
      } else {
        coeff.push_back(f);
      }
    }
    parts[deg].push_back(make_product(std::move(coeff)));
  }
  std::map<Monomial, Expr> out;
  for (auto& [m, cs] : parts) {
    Expr c = make_sum(std::move(cs));
    if (!c.is_zero()) out.emplace(m, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

enum Prec { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

std::string print(const Expr& e, int ctx);

std::string print_number(const Number& n, int ctx) {
  std::string s = n.str();
  bool needs = false;
  if (n.is_negative() && ctx > kSum) needs = true;
  if (n.is_exact() && !n.rational().is_integer() && ctx > kSum) needs = true;
  if (!n.is_exact() && ctx >= kPower && n.is_negative()) needs = true;
  return needs ? "(" + s + ")" : s;
}

std::string print_exponent(const Rational& r) {
  if (r.is_integer() && !r.is_negative()) return r.str();
  return "(" + r.str() + ")";
}

// Product printed without its sign; caller handles a leading "-".
std::string print_product_body(const Number& coeff, std::span<const Expr> factors) {
  std::string out;
  if (!coeff.is_one()) out = print_number(coeff, kProduct);
  for (const auto& f : factors) {
    if (!out.empty()) out += "*";
    out += print(f, kProduct + 1);
  }
  return out;
}

std::string print_term_unsigned(const Expr& term, bool& negative) {
  auto [c, rest] = split_coefficient(term);
  negative = c.is_negative();
  Number mag = negative ? -c : c;
  if (term.is_constant()) return print_number(mag, kSum);
  std::vector<Expr> fs = rest.is(Kind::product)
                             ? std::vector<Expr>(rest.args().begin(), rest.args().end())
                             : std::vector<Expr>{rest};
  return print_product_body(mag, fs);
}

std::string print(const Expr& e, int ctx) {
  switch (e.kind()) {
    case Kind::constant:
      return print_number(e.value(), ctx);
    case Kind::symbol:
      return e.name();
    case Kind::sum: {
      std::string out;
      bool first = true;
      for (const auto& t : e.args()) {
        bool neg = false;
        std::string body = print_term_unsigned(t, neg);
        if (first) {
          out = neg ? "-" + body : body;
        } else {
          out += neg ? " - " : " + ";
          out += body;
        }
        first = false;
      }
      return ctx > kSum ? "(" + out + ")" : out;
    }
    case Kind::product: {
      bool neg = false;
      std::string body = print_term_unsigned(e, neg);
      std::string out = neg ? "-" + body : body;
      return (neg && ctx > kSum) ? "(" + out + ")" : out;
    }
    case Kind::power: {
      const Expr& b = e.base();
      std::string bs = print(b, kAtom);
      if (b.is(Kind::product) || b.is(Kind::power)) bs = "(" + bs + ")";
      return bs + "^" + print_exponent(e.exponent());
    }
    case Kind::exp:
      return "exp(" + print(e.arg(), 0) + ")";
  }
  return {};
}

}  // namespace

std::string to_string(const Expr& e) { return print(e, 0); }

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

}  // namespace thermoquant::symcore
