#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoquant/constraints/constraints.hpp"
#include "thermoquant/models/model.hpp"
#include "thermoquant/symcore/evaluate.hpp"
#include "thermoquant/wavefield/grid.hpp"

namespace thermoquant::quantize {

using models::Ordering;
using symcore::Complex;
using symcore::Expr;
using symcore::RealBinding;
using wavefield::WaveField;

/// re + i*im with real symbolic parts.
struct CExpr {
  Expr re;
  Expr im;

  CExpr() = default;
  CExpr(Expr r) : re(std::move(r)) {}
  CExpr(Expr r, Expr i) : re(std::move(r)), im(std::move(i)) {}
  static CExpr imag(Expr i) { return {Expr(0), std::move(i)}; }

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  CExpr simplified() const;
  CExpr conj() const { return {re, -im}; }
  CExpr derivative(std::string_view var) const;

  friend CExpr operator+(const CExpr& a, const CExpr& b) { return {a.re + b.re, a.im + b.im}; }
  friend CExpr operator-(const CExpr& a, const CExpr& b) { return {a.re - b.re, a.im - b.im}; }
  friend CExpr operator*(const CExpr& a, const CExpr& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  CExpr operator-() const { return {-re, -im}; }
  friend bool operator==(const CExpr& a, const CExpr& b) { return a.re == b.re && a.im == b.im; }

  Complex evaluate(const RealBinding& b) const;
  std::string str() const;
};

/// Real compiled pair for repeated evaluation at (tau, q).
class CompiledCExpr {
public:
  CompiledCExpr() = default;
  CompiledCExpr(const CExpr& e, const RealBinding& params)
      : re_(e.re, {"tau", "q"}, params), im_(e.im, {"tau", "q"}, params) {}
  Complex operator()(double tau, double q) const { return {re_(tau, q), im_(tau, q)}; }

private:
  symcore::CompiledExpr re_, im_;
};

/// coeff * d^dtau/dtau^dtau d^dq/dq^dq
struct Term {
  CExpr coeff;
  int dtau = 0;
  int dq = 0;
};

/// Linear differential operator in (tau, q) with symbolic coefficients. The
/// term list is kept canonical: one term per derivative pair, sorted by
/// (dtau, dq) descending, coefficients simplified, zero terms dropped.
class DifferentialOperator {
public:
  DifferentialOperator() = default;
  explicit DifferentialOperator(std::vector<Term> terms);

  static DifferentialOperator identity();
  static DifferentialOperator multiply(CExpr c);
  static DifferentialOperator d_tau(int order = 1);
  static DifferentialOperator d_q(int order = 1);
  /// Canonical realization: tau, q multiplicative; p = -i bbar d_q; pi = -i bbar d_tau.
  static DifferentialOperator tau_hat();
  static DifferentialOperator q_hat();
  static DifferentialOperator p_hat();
  static DifferentialOperator pi_hat();

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  /// Coefficient of the given derivative pair (zero when absent).
  CExpr coefficient(int dtau, int dq) const;
  int max_dtau() const;
  int max_dq() const;
  bool is_multiplicative() const { return max_dtau() == 0 && max_dq() == 0; }

  friend DifferentialOperator operator+(const DifferentialOperator& a, const DifferentialOperator& b);
  friend DifferentialOperator operator-(const DifferentialOperator& a, const DifferentialOperator& b);
  friend DifferentialOperator operator*(const CExpr& c, const DifferentialOperator& a);
  DifferentialOperator operator-() const;
  /// Term lists structurally identical.
  friend bool operator==(const DifferentialOperator& a, const DifferentialOperator& b);

  /// Operator with every coefficient's symbols substituted.
  DifferentialOperator substituted(const std::map<std::string, Expr, std::less<>>& subs) const;

  std::string str() const;
  nlohmann::json to_json() const;

private:
  std::vector<Term> terms_;
};

/// (a o b) psi = a(b(psi)), via the Leibniz rule on coefficients.
DifferentialOperator compose(const DifferentialOperator& a, const DifferentialOperator& b);
DifferentialOperator commutator(const DifferentialOperator& a, const DifferentialOperator& b);
/// Numeric zero test of every coefficient of a - b on sampled (tau, q) points.
bool equivalent(const DifferentialOperator& a, const DifferentialOperator& b,
                const RealBinding& params, const models::DomainBox& box, double tol = 1e-10);

/// Promotes a polynomial in (pi, p) with (tau, q)-dependent coefficients.
/// Throws NonPolynomialMomentum.
DifferentialOperator promote(const Expr& e, Ordering ord);
DifferentialOperator promote(const constraints::Constraint& c, Ordering ord);

/// Symbolic (op psi)/psi for psi = exp(log_modulus + i phase).
CExpr log_derivative_action(const DifferentialOperator& op, const Expr& log_modulus, const Expr& phase);

/// op applied to the field: analytic when a closed form is attached (the
/// analytic log-derivative multiplies the stored values), otherwise by
/// 5-point finite differences. Throws GridTooCoarse.
Eigen::MatrixXcd apply(const DifferentialOperator& op, const WaveField& psi, const RealBinding& params);
/// Same, always by finite differences.
Eigen::MatrixXcd apply_fd(const DifferentialOperator& op, const WaveField& psi, const RealBinding& params);

/// Fornberg weights of the given derivative order at z on 5 nodes.
std::array<double, 5> fd_weights(std::span<const double> nodes, double z, int order);
/// First index of the 5-node stencil around z (clamped at the ends).
std::size_t stencil_start(const std::vector<double>& nodes, double z);

/// 5-point Fornberg differentiation matrix of the given order on the nodes;
/// central in the interior, one-sided near the ends. Throws GridTooCoarse.
Eigen::MatrixXd fd_matrix(const std::vector<double>& nodes, int order);

/// sqrt(integral |f|^2) with the grid's quadrature weights.
double l2_norm(const Eigen::MatrixXcd& f, const wavefield::Grid2D& g);

/// Gaussian probes exp(-(tau-tc)^2/(2 st^2) - (q-qc)^2/(2 sq^2) + i(kt tau + kq q))
/// centred inside the box with widths at most 1/8 of the distance to the edges.
std::vector<WaveField> gaussian_probes(std::shared_ptr<const wavefield::Grid2D> grid, std::size_t count,
                                       std::uint64_t seed);

/// max over probes of || ([a,b] - expected) probe ||.
double commutator_defect(const DifferentialOperator& a, const DifferentialOperator& b,
                         const DifferentialOperator& expected, const std::vector<WaveField>& probes,
                         const RealBinding& params);

inline void PrintTo(const CExpr& c, std::ostream* os) { *os << c.str(); }
inline void PrintTo(const DifferentialOperator& d, std::ostream* os) { *os << d.str(); }

}  // namespace thermoquant::quantize
