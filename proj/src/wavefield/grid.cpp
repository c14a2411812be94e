#include "thermoquant/wavefield/grid.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "thermoquant/errors.hpp"

namespace thermoquant::wavefield {

void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Axis Axis::make(double lo, double hi, std::size_t n, Scheme scheme) {
  if (n < 5) throw GridTooCoarse("need at least 5 nodes per axis, got " + std::to_string(n));
  if (!(lo < hi)) throw DomainError("axis bounds must be increasing");
  Axis a;
  a.lo = lo;
  a.hi = hi;
  a.scheme = scheme;
  if (scheme == Scheme::gauss_legendre) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < n; ++i) {
      a.nodes.push_back(mid + half * x[i]);
      a.weights.push_back(half * w[i]);
    }
  } else {
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      a.nodes.push_back(i + 1 == n ? hi : lo + h * static_cast<double>(i));
      a.weights.push_back((i == 0 || i + 1 == n) ? 0.5 * h : h);
    }
  }
  return a;
}

bool Axis::operator==(const Axis& o) const {
  return lo == o.lo && hi == o.hi && scheme == o.scheme && nodes == o.nodes;
}

std::shared_ptr<const Grid2D> Grid2D::make(const models::DomainBox& box, std::size_t n_tau,
                                           std::size_t n_q, Scheme scheme) {
  auto g = std::make_shared<Grid2D>();
  g->tau = Axis::make(box.tau_min, box.tau_max, n_tau, scheme);
  g->q = Axis::make(box.q_min, box.q_max, n_q, scheme);
  return g;
}

Complex ClosedForm::operator()(double tau, double q) const {
  RealBinding b = params;
  b["tau"] = tau;
  b["q"] = q;
  double m = symcore::evaluate_real(log_modulus, b);
  double ph = symcore::evaluate_real(phase, b);
  return scale * std::polar(std::exp(m), ph);
}

MetricWeight MetricWeight::standard() { return {Expr(1), "standard", {}}; }

MetricWeight MetricWeight::theta(double kB) {
  return {symcore::exp(symcore::sym("tau") / symcore::sym("kB")), "theta", {{"kB", kB}}};
}

MetricWeight MetricWeight::exponential(double c, std::string label) {
  return {symcore::exp(symcore::sym("c") * symcore::sym("tau")), std::move(label), {{"c", c}}};
}

Eigen::VectorXd MetricWeight::on(const Axis& tau) const {
  symcore::CompiledExpr w(weight, {"tau"}, params);
  Eigen::VectorXd out(static_cast<Eigen::Index>(tau.size()));
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double t = tau.nodes[i];
    out(static_cast<Eigen::Index>(i)) = w(std::span<const double>(&t, 1));
    if (!(out(static_cast<Eigen::Index>(i)) > 0)) throw DomainError("metric weight must be positive");
  }
  return out;
}

WaveField WaveField::from_closed_form(std::shared_ptr<const Grid2D> g, ClosedForm cf) {
  symcore::CompiledExpr m(cf.log_modulus, {"tau", "q"}, cf.params);
  symcore::CompiledExpr ph(cf.phase, {"tau", "q"}, cf.params);
  Eigen::MatrixXcd v(static_cast<Eigen::Index>(g->tau.size()), static_cast<Eigen::Index>(g->q.size()));
  for (std::size_t i = 0; i < g->tau.size(); ++i) {
    for (std::size_t j = 0; j < g->q.size(); ++j) {
      const double t = g->tau.nodes[i], q = g->q.nodes[j];
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cf.scale * std::polar(std::exp(m(t, q)), ph(t, q));
    }
  }
  WaveField f(std::move(g), std::move(v));
  f.closed = std::move(cf);
  return f;
}

WaveField WaveField::scaled(Complex s) const {
  WaveField f = *this;
  f.values *= s;
  if (f.closed) f.closed->scale *= s;
  f.normalized = false;
  return f;
}

WaveField WaveField::times_tau_function(const std::vector<Complex>& factor,
                                        std::optional<Expr> log_factor) const {
  WaveField f = *this;
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) f.values.row(i) *= factor[static_cast<std::size_t>(i)];
  if (f.closed && log_factor) {
    f.closed->log_modulus = symcore::simplify(f.closed->log_modulus + *log_factor);
  } else {
    f.closed.reset();
  }
  f.normalized = false;
  return f;
}

void require_same_grid(const WaveField& a, const WaveField& b) {
  if (!a.grid || !b.grid) throw GridMismatch("field without grid");
  if (a.grid != b.grid && !(*a.grid == *b.grid)) throw GridMismatch("fields live on different grids");
}

void write_csv(const WaveField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tau,q,re,im\n";
  char buf[160];
  for (std::size_t i = 0; i < f.grid->tau.size(); ++i) {
    for (std::size_t j = 0; j < f.grid->q.size(); ++j) {
      Complex v = f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", f.grid->tau.nodes[i],
                    f.grid->q.nodes[j], v.real(), v.imag());
      out << buf;
    }
  }
}

}  // namespace thermoquant::wavefield
