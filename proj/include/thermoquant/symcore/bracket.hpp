#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermoquant/symcore/evaluate.hpp"
#include "thermoquant/symcore/expression.hpp"

namespace thermoquant::symcore {

enum class Role { coordinate, momentum, parameter };

struct Symbol {
  std::string name;
  Role role = Role::parameter;
  std::optional<std::string> conjugate;
};

class SymbolTable {
public:
  /// tau<->pi, q<->p and the default model parameters.
  static SymbolTable standard();

  void add(Symbol s);
  void add_pair(const std::string& coordinate, const std::string& momentum);
  const Symbol* find(std::string_view name) const;
  const std::vector<Symbol>& symbols() const { return symbols_; }
  /// True when names are unique and every conjugate link is mutual.
  bool consistent() const;

private:
  std::vector<Symbol> symbols_;
};

struct CanonicalPair {
  std::string coordinate;
  std::string momentum;
};

/// (tau, pi) and (q, p).
std::vector<CanonicalPair> standard_pairs();

Expr poisson_bracket(const Expr& f, const Expr& g, const std::vector<CanonicalPair>& pairs);

enum class ZeroStatus { exact_zero, numeric_zero, nonzero };

struct ZeroTestOptions {
  std::uint64_t seed = 0;
  int samples = 100;
  double tolerance = 1e-10;
  double lo = 0.3;
  double hi = 1.7;
  /// Per-symbol sampling intervals overriding [lo, hi].
  std::map<std::string, std::pair<double, double>, std::less<>> ranges;
  /// Fixed values; these symbols are not sampled.
  RealBinding fixed;
};

struct ZeroTestResult {
  ZeroStatus status = ZeroStatus::nonzero;
  double max_abs = 0;
  int evaluated = 0;
};

/// Exact test by simplify(expand(e)) == 0, then random numeric sampling.
/// Samples that raise DomainError are skipped; with no valid sample the
/// result is nonzero.
ZeroTestResult zero_test(const Expr& e, const ZeroTestOptions& opt = {});

const char* to_string(ZeroStatus s);

}  // namespace thermoquant::symcore
