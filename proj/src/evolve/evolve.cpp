#include "thermoquant/evolve/evolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>

#include "thermoquant/errors.hpp"
#include "thermoquant/parallel.hpp"
#include "thermoquant/symcore/parse.hpp"

namespace thermoquant::evolve {

using quantize::CExpr;
using quantize::CompiledCExpr;
using symcore::Expr;

const char* to_string(Scheme s) {
  return s == Scheme::characteristics ? "characteristics" : "implicit_midpoint";
}

DifferentialOperator ideal_gas_generator() {
  return quantize::promote(symcore::parse("q*p/kB"), models::Ordering::symmetric);
}

namespace {

/// psi_tau = a1(tau, q) psi_q + a0(tau, q) psi with a = -(i/bbar) * coefficient.
struct Rhs {
  CompiledCExpr a1, a0;
  bool tau_dependent = false;
  bool real_advection = false;
};

Rhs reduce(const EvolutionConfig& cfg) {
  for (const auto& t : cfg.generator.terms()) {
    if (t.dtau > 0) throw UnsupportedGenerator("generator must not differentiate in tau");
    if (t.dq > 1) throw UnsupportedGenerator("generators with second-order d_q terms are not supported");
  }
  if (!cfg.params.count("bbar")) throw UnboundSymbol("bbar");
  const CExpr minus_i_over_bbar = CExpr::imag(Expr(-1) / symcore::sym("bbar"));
  const CExpr c1 = (minus_i_over_bbar * cfg.generator.coefficient(0, 1)).simplified();
  const CExpr c0 = (minus_i_over_bbar * cfg.generator.coefficient(0, 0)).simplified();
  Rhs r{CompiledCExpr(c1, cfg.params), CompiledCExpr(c0, cfg.params), false, false};
  for (const auto* e : {&c1.re, &c1.im, &c0.re, &c0.im}) r.tau_dependent |= symcore::depends_on(*e, "tau");
  // real speed: sample Im a1 across the domain
  r.real_advection = !c1.re.is_zero() || c1.im.is_zero();
  const double tl = cfg.tau0, th = cfg.tau1;
  for (int k = 0; k <= 20 && r.real_advection; ++k) {
    for (int j = 0; j <= 20; ++j) {
      const double tau = tl + (th - tl) * k / 20.0, q = cfg.q.lo + (cfg.q.hi - cfg.q.lo) * j / 20.0;
      if (std::abs(r.a1(tau, q).imag()) > 1e-14) {
        r.real_advection = false;
        break;
      }
    }
  }
  return r;
}

/// 4-point Lagrange interpolation/extrapolation of samples on the axis.
Complex cubic(const wavefield::Axis& ax, const std::vector<Complex>& v, double x) {
  const auto& n = ax.nodes;
  std::size_t i = static_cast<std::size_t>(std::lower_bound(n.begin(), n.end(), x) - n.begin());
  std::size_t s = i >= 2 ? i - 2 : 0;
  s = std::min(s, n.size() - 4);
  Complex out = 0;
  for (std::size_t a = s; a < s + 4; ++a) {
    double l = 1;
    for (std::size_t b = s; b < s + 4; ++b) {
      if (b != a) l *= (x - n[b]) / (n[a] - n[b]);
    }
    out += l * v[a];
  }
  return out;
}

class Tracer {
public:
  Tracer(const Rhs& rhs, const EvolutionConfig& cfg, const std::function<Complex(double)>& psi0,
         const std::vector<Complex>& samples)
      : rhs_(rhs), cfg_(cfg), psi0_(psi0), samples_(samples) {}

  /// psi(tau, q) from the characteristic through (tau, q) back to tau0.
  Complex value(double tau, double q) const {
    const double span = tau - cfg_.tau0;
    if (span <= 0) return initial(q);
    const int n = std::max(1, static_cast<int>(std::ceil(span / cfg_.trace_step)));
    const double h = -span / n;
    // d q/d tau = -a1 (speed), d logA/d tau = a0 along dq/dtau = -a1
    double x = q, t = tau;
    Complex logA = 0;
    auto f = [&](double tt, double xx) {
      return std::pair<double, Complex>{-rhs_.a1(tt, xx).real(), rhs_.a0(tt, xx)};
    };
    for (int s = 0; s < n; ++s) {
      auto [k1, l1] = f(t, x);
      auto [k2, l2] = f(t + 0.5 * h, x + 0.5 * h * k1);
      auto [k3, l3] = f(t + 0.5 * h, x + 0.5 * h * k2);
      auto [k4, l4] = f(t + h, x + h * k3);
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      logA += h / 6 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      t = tau - span * (s + 1) / n;
    }
    // psi(tau) = psi0(foot) * exp(-logA) since logA integrates backwards
    return initial(x) * std::exp(-logA);
  }

  Complex initial(double x) const {
    const bool outside = x < cfg_.q.lo || x > cfg_.q.hi;
    if (outside && cfg_.foot == FootPointRule::error) {
      throw FootPointOutOfDomain("characteristic foot point q = " + std::to_string(x) + " outside the q-interval");
    }
    if (cfg_.foot == FootPointRule::evaluate) return psi0_(x);
    return cubic(cfg_.q, samples_, x);
  }

private:
  const Rhs& rhs_;
  const EvolutionConfig& cfg_;
  const std::function<Complex(double)>& psi0_;
  const std::vector<Complex>& samples_;
};

std::vector<double> step_times(const EvolutionConfig& cfg) {
  if (!(cfg.h_tau > 0)) throw DomainError("h_tau must be positive");
  if (!(cfg.tau1 > cfg.tau0)) throw DomainError("tau1 must exceed tau0");
  const int n = std::max(1, static_cast<int>(std::llround((cfg.tau1 - cfg.tau0) / cfg.h_tau)));
  std::vector<double> t;
  for (int k = 0; k <= n; ++k) t.push_back(cfg.tau0 + (cfg.tau1 - cfg.tau0) * k / n);
  return t;
}

Eigen::SparseMatrix<Complex> operator_matrix(const Rhs& rhs, const wavefield::Axis& ax, const Eigen::MatrixXd& D1,
                                             double tau) {
  const auto n = static_cast<Eigen::Index>(ax.size());
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = ax.nodes[static_cast<std::size_t>(i)];
    const Complex a1 = rhs.a1(tau, q), a0 = rhs.a0(tau, q);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (D1(i, j) != 0.0) trip.emplace_back(i, j, a1 * D1(i, j));
    }
    trip.emplace_back(i, i, a0);
  }
  Eigen::SparseMatrix<Complex> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

}  // namespace

Trajectory evolve(const std::function<Complex(double)>& psi0, const EvolutionConfig& cfg) {
  const Rhs rhs = reduce(cfg);
  const auto& ax = cfg.q;
  const std::size_t nq = ax.size();
  if (nq < 5) throw GridTooCoarse("need at least 5 q nodes");
  std::vector<Complex> samples(nq);
  for (std::size_t j = 0; j < nq; ++j) samples[j] = psi0(ax.nodes[j]);
  const auto times = step_times(cfg);

  Trajectory out;
  out.q = ax;
  if (auto it = cfg.params.find("kB"); it != cfg.params.end()) out.kB = it->second;
  Eigen::VectorXcd cur(static_cast<Eigen::Index>(nq));
  for (std::size_t j = 0; j < nq; ++j) cur(static_cast<Eigen::Index>(j)) = samples[j];
  out.snapshots.push_back({times[0], cur});

  if (cfg.scheme == Scheme::characteristics) {
    if (!rhs.real_advection) throw UnsupportedGenerator("characteristics need a real advection speed");
    Tracer tr(rhs, cfg, psi0, samples);
    for (std::size_t k = 1; k < times.size(); ++k) {
      Eigen::VectorXcd v(static_cast<Eigen::Index>(nq));
      parallel_for(0, nq, [&](std::size_t j) { v(static_cast<Eigen::Index>(j)) = tr.value(times[k], ax.nodes[j]); });
      out.snapshots.push_back({times[k], std::move(v)});
    }
    return out;
  }

  // implicit midpoint on the method-of-lines system psi' = L(tau) psi
  const Eigen::MatrixXd D1 = quantize::fd_matrix(ax.nodes, 1);
  const auto n = static_cast<Eigen::Index>(nq);
  Eigen::SparseMatrix<Complex> I(n, n);
  I.setIdentity();
  std::optional<Tracer> inflow;
  if (rhs.real_advection) inflow.emplace(rhs, cfg, psi0, samples);
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  Eigen::SparseMatrix<Complex> A, B;
  bool dirichlet = false;
  double factored_at = std::nan("");
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1], mid = 0.5 * (times[k] + times[k - 1]);
    if (rhs.tau_dependent || std::isnan(factored_at) || std::abs(h - factored_at) > 1e-15) {
      Eigen::SparseMatrix<Complex> L = operator_matrix(rhs, ax, D1, mid);
      A = I - (0.5 * h) * L;
      B = I + (0.5 * h) * L;
      // inflow at the first node: replace its row by a Dirichlet condition
      dirichlet = inflow && rhs.a1(mid, ax.nodes.front()).real() < 0;
      if (dirichlet) {
        A.prune([](Eigen::Index r, Eigen::Index, const Complex&) { return r != 0; });
        A.coeffRef(0, 0) = 1.0;
      }
      A.makeCompressed();
      lu.compute(A);
      if (lu.info() != Eigen::Success) throw DomainError("implicit-midpoint system is singular");
      factored_at = h;
    }
    Eigen::VectorXcd rhs_v = B * cur;
    if (dirichlet) rhs_v(0) = inflow->value(times[k], ax.nodes.front());
    cur = lu.solve(rhs_v);
    out.snapshots.push_back({times[k], cur});
  }
  return out;
}

std::vector<NormPoint> norm_series(const Trajectory& t) {
  std::vector<NormPoint> s;
  for (const auto& snap : t.snapshots) {
    double p = 0;
    for (std::size_t j = 0; j < t.q.size(); ++j) p += t.q.weights[j] * std::norm(snap.values(static_cast<Eigen::Index>(j)));
    s.push_back({snap.tau, p, std::exp(snap.tau / t.kB) * p});
  }
  return s;
}

double max_relative_error(const Trajectory& t, const std::function<Complex(double, double)>& exact) {
  double num = 0, den = 0;
  for (const auto& snap : t.snapshots) {
    for (std::size_t j = 0; j < t.q.size(); ++j) {
      const Complex e = exact(snap.tau, t.q.nodes[j]);
      num = std::max(num, std::abs(snap.values(static_cast<Eigen::Index>(j)) - e));
      den = std::max(den, std::abs(e));
    }
  }
  return den > 0 ? num / den : num;
}

double decay_rate_deviation(const Trajectory& t, double rate) {
  auto s = norm_series(t);
  double worst = 0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double r = (std::log(s[k + 1].p_standard) - std::log(s[k].p_standard)) / (s[k + 1].tau - s[k].tau);
    worst = std::max(worst, std::abs(r - rate));
  }
  return worst;
}

void write_trajectory_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tau,q,re,im\n";
  char buf[160];
  for (const auto& snap : t.snapshots) {
    for (std::size_t j = 0; j < t.q.size(); ++j) {
      const Complex v = snap.values(static_cast<Eigen::Index>(j));
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", snap.tau, t.q.nodes[j], v.real(), v.imag());
      out << buf;
    }
  }
}

void write_norm_series_csv(const std::vector<NormPoint>& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tau,P_standard,P_theta\n";
  char buf[128];
  for (const auto& p : s) {
    std::snprintf(buf, sizeof buf, "%.12g,%.15g,%.15g\n", p.tau, p.p_standard, p.p_theta);
    out << buf;
  }
}

}  // namespace thermoquant::evolve
