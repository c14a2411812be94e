#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoquant/symcore/bracket.hpp"
#include "thermoquant/symcore/expression.hpp"

namespace thermoquant::constraints {

using symcore::CanonicalPair;
using symcore::Expr;

struct Constraint {
  std::string name;
  Expr expr;
  /// Set when expr = c*(p_mu + h) with c a nonzero number and h free of p_mu.
  bool normal_form = false;
  std::optional<std::string> leading_momentum;
  Expr h;

  /// Throws DomainError if `expr` has no phase-space symbol.
  static Constraint make(std::string name, Expr expr, const std::vector<CanonicalPair>& pairs);
};

/// Momenta m such that expr is linear in m with a nonzero numeric coefficient.
std::vector<std::string> normal_form_momenta(const Expr& e, const std::vector<CanonicalPair>& pairs);

enum class PairClass { first, second, undetermined };
const char* to_string(PairClass c);

/// {phi_i, phi_j} = factor * phi_k
struct StructureFunction {
  Expr factor;
  int constraint = -1;  // -1: the bracket vanishes identically
};

struct ClassifyOptions {
  std::uint64_t seed = 0;
  int samples = 100;
  double tolerance = 1e-10;
  /// Parameter values used for on-shell sampling.
  symcore::RealBinding parameters;
  /// Sampling intervals for coordinates (and any unconstrained momenta).
  std::map<std::string, std::pair<double, double>, std::less<>> ranges;
};

struct ClassificationResult {
  std::vector<std::string> names;
  std::vector<std::vector<Expr>> brackets;
  std::vector<std::vector<PairClass>> pair_class;
  std::vector<std::vector<std::optional<StructureFunction>>> structure;
  /// How each pair was decided: "exact_zero", "proportional", "on_shell_symbolic",
  /// "on_shell_numeric", "on_shell_nonzero", "inconclusive".
  std::vector<std::vector<std::string>> method;

  /// Per constraint: first if all its pairs are first, second if any is second.
  PairClass constraint_class(std::size_t i) const;
  bool all_first() const;
  bool any_undetermined() const;
  std::vector<std::size_t> second_class_indices() const;

  nlohmann::json to_json() const;
};

ClassificationResult classify(const std::vector<Constraint>& cs,
                              const std::vector<CanonicalPair>& pairs,
                              const ClassifyOptions& opt = {});

/// Expression restricted to the constraint surface by solving normal-form
/// constraints for distinct leading momenta. Constraints left over (no free
/// leading momentum) are returned in `residual_constraints`.
struct SurfaceRestriction {
  Expr restricted;
  std::vector<Expr> residual_constraints;
};
SurfaceRestriction restrict_to_surface(const Expr& e, const std::vector<Constraint>& cs);

struct KMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<Expr>> entries;
  Expr det;

  std::size_t size() const { return entries.size(); }
  nlohmann::json to_json() const;
};

KMatrix k_matrix(const std::vector<Constraint>& cs, const std::vector<CanonicalPair>& pairs);
/// Adjugate / determinant. Throws SingularK for odd size or vanishing det.
KMatrix invert_k(const KMatrix& k, const ClassifyOptions& opt = {});

class DiracBracket {
public:
  /// `second_class` may be empty; the bracket then reduces to Poisson.
  DiracBracket(std::vector<Constraint> second_class, std::vector<CanonicalPair> pairs,
               const ClassifyOptions& opt = {});
  Expr operator()(const Expr& f, const Expr& g) const;
  const KMatrix& k() const { return k_; }
  const KMatrix& k_inverse() const { return kinv_; }

private:
  std::vector<Constraint> cs_;
  std::vector<CanonicalPair> pairs_;
  KMatrix k_;
  KMatrix kinv_;
};

Expr dirac_bracket(const Expr& f, const Expr& g, const std::vector<Constraint>& second_class,
                   const std::vector<CanonicalPair>& pairs);

struct ExtendedHamiltonian {
  std::vector<std::string> multipliers;
  std::vector<Constraint> terms;

  /// Multipliers lambda1..lambdaN.
  static ExtendedHamiltonian from(const std::vector<Constraint>& cs);
  Expr expression() const;
  /// lambda1/lambda2, only for two-constraint systems.
  std::optional<Expr> kappa() const;
};

/// dO/dtau = dO/dtau|explicit + {O, h}_(q,p) - (dh/dtau)(dO/dpi) for pi + h.
/// Throws NotNormalForm unless the generator is normal form in pi.
Expr observable_flow(const Expr& o, const Constraint& generator);
/// Formal flow {O, H} with symbolic multipliers over all pairs.
Expr observable_flow(const Expr& o, const ExtendedHamiltonian& h,
                     const std::vector<CanonicalPair>& pairs);

}  // namespace thermoquant::constraints
