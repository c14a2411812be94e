#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thermoquant/models/model.hpp"
#include "thermoquant/symcore/evaluate.hpp"

namespace thermoquant::wavefield {

using symcore::Complex;
using symcore::Expr;
using symcore::RealBinding;

enum class Scheme { uniform_trapezoid, gauss_legendre };

struct Axis {
  double lo = 0;
  double hi = 1;
  Scheme scheme = Scheme::gauss_legendre;
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Throws GridTooCoarse below 5 nodes.
  static Axis make(double lo, double hi, std::size_t n, Scheme scheme);
  std::size_t size() const { return nodes.size(); }
  bool operator==(const Axis& o) const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w);

struct Grid2D {
  Axis tau;
  Axis q;

  static std::shared_ptr<const Grid2D> make(const models::DomainBox& box, std::size_t n_tau,
                                            std::size_t n_q, Scheme scheme = Scheme::gauss_legendre);
  models::DomainBox box() const { return {tau.lo, tau.hi, q.lo, q.hi}; }
  bool operator==(const Grid2D& o) const { return tau == o.tau && q == o.q; }
};

/// psi = scale * exp(log_modulus + i*phase), expressions in (tau, q).
struct ClosedForm {
  Expr log_modulus;
  Expr phase;
  Complex scale{1.0, 0.0};
  RealBinding params;

  Complex operator()(double tau, double q) const;
};

struct MetricWeight {
  Expr weight;
  std::string label;
  RealBinding params;

  static MetricWeight standard();
  /// exp(tau/kB)
  static MetricWeight theta(double kB);
  /// exp(c*tau) for a Dyson exponent c; Theta = eta^2.
  static MetricWeight exponential(double c, std::string label);
  Eigen::VectorXd on(const Axis& tau) const;
};

class WaveField {
public:
  std::shared_ptr<const Grid2D> grid;
  Eigen::MatrixXcd values;  // rows: tau nodes, cols: q nodes
  std::optional<ClosedForm> closed;
  bool normalized = false;

  WaveField() = default;
  WaveField(std::shared_ptr<const Grid2D> g, Eigen::MatrixXcd v) : grid(std::move(g)), values(std::move(v)) {}
  static WaveField from_closed_form(std::shared_ptr<const Grid2D> g, ClosedForm cf);

  WaveField scaled(Complex s) const;
  /// Pointwise product with a function of tau, dropping the closed form
  /// unless `log_factor` is given (then added to the log-modulus).
  WaveField times_tau_function(const std::vector<Complex>& factor,
                               std::optional<Expr> log_factor = std::nullopt) const;
};

/// Throws GridMismatch.
void require_same_grid(const WaveField& a, const WaveField& b);

/// CSV columns: tau, q, re, im.
void write_csv(const WaveField& f, const std::string& path);

}  // namespace thermoquant::wavefield
