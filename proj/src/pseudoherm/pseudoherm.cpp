#include "thermoquant/pseudoherm/pseudoherm.hpp"

#include <cmath>
#include <random>

#include "thermoquant/errors.hpp"

namespace thermoquant::pseudoherm {

using quantize::compose;
using symcore::simplify;
using symcore::sym;

namespace {

bool phase_space_free(const Expr& e) {
  for (const char* s : {"q", "p", "pi"}) {
    if (symcore::depends_on(e, s)) return false;
  }
  return true;
}

}  // namespace

DysonMap DysonMap::exponential(const Expr& exponent) {
  if (!phase_space_free(exponent) || symcore::depends_on(exponent, "tau")) {
    throw NonCommutingMap("Dyson exponent must be a tau-independent constant: " + to_string(exponent));
  }
  DysonMap d{symcore::exp(exponent * sym("tau")), symcore::exp(-exponent * sym("tau"))};
  return d;
}

DysonMap DysonMap::standard() { return exponential(Expr(1) / (Expr(2) * sym("kB"))); }

void DysonMap::validate() const {
  if (!phase_space_free(eta) || !phase_space_free(inverse)) {
    throw NonCommutingMap("Dyson map depends on q or momenta: " + to_string(eta));
  }
  if (!simplify(eta * inverse).is_one()) throw NonCommutingMap("eta * eta^-1 does not simplify to 1");
}

Expr DysonMap::theta() const { return simplify(eta * eta); }

wavefield::MetricWeight DysonMap::metric(const RealBinding& params, std::string label) const {
  return {theta(), std::move(label), params};
}

DifferentialOperator generator_from_constraint(const DifferentialOperator& phi1) {
  return phi1 - DifferentialOperator::pi_hat();
}

DifferentialOperator transform_observable(const DifferentialOperator& o, const DysonMap& eta) {
  eta.validate();
  return compose(DifferentialOperator::multiply(CExpr(eta.eta)),
                 compose(o, DifferentialOperator::multiply(CExpr(eta.inverse))));
}

DifferentialOperator transform_generator(const DifferentialOperator& H, const DysonMap& eta) {
  const Expr rate = simplify(symcore::differentiate(eta.eta, "tau") * eta.inverse);
  return transform_observable(H, eta) + DifferentialOperator::multiply(CExpr::imag(sym("bbar") * rate));
}

DifferentialOperator pseudo_observable(const DifferentialOperator& h, const DysonMap& eta) {
  eta.validate();
  return compose(DifferentialOperator::multiply(CExpr(eta.inverse)),
                 compose(h, DifferentialOperator::multiply(CExpr(eta.eta))));
}

DysonMap matching_dyson_map(const DifferentialOperator& H) {
  // constant term -i bbar s  ->  eta = exp(s tau)
  const Expr s = simplify(-H.coefficient(0, 0).im / sym("bbar"));
  if (symcore::depends_on(s, "q") || symcore::depends_on(s, "tau")) {
    throw NonCommutingMap("imaginary part of the generator's constant term depends on q or tau: " + to_string(s));
  }
  return DysonMap::exponential(s);
}

std::vector<PhaseProbe> phase_probes(const models::DomainBox& box, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PhaseProbe> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double tau = box.tau_min + (box.tau_max - box.tau_min) * (0.1 + 0.8 * u(rng));
    out.push_back({tau, -3.0 + 6.0 * u(rng), -1.0 + 2.0 * u(rng)});
  }
  return out;
}

std::vector<wavefield::WaveField> phase_probe_fields(std::shared_ptr<const wavefield::Grid2D> grid,
                                                     std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto box = grid->box();
  std::vector<wavefield::WaveField> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double tc = box.tau_min + (box.tau_max - box.tau_min) * (0.3 + 0.4 * u(rng));
    const double w = 0.2 + 0.5 * u(rng);
    const double k = -3.0 + 6.0 * u(rng), c = -1.0 + 2.0 * u(rng);
    auto C = [](double v) { return Expr::constant(v); };
    Expr M = C(-1.0 / (2 * w * w)) * symcore::pow(sym("tau") - C(tc), 2);
    Expr S = C(k) * sym("q") + C(c) * symcore::pow(sym("q"), 2);
    out.push_back(wavefield::normalize(wavefield::WaveField::from_closed_form(grid, {M, S, {1.0, 0.0}, {}}),
                                       wavefield::MetricWeight::standard())
                      .first);
  }
  return out;
}

double quasi_hermitian_residual(const DifferentialOperator& H, const DysonMap& eta,
                                const std::vector<PhaseProbe>& probes, const RealBinding& params,
                                const wavefield::Axis& q, double h_tau) {
  eta.validate();
  const auto w = eta.metric(params);
  RealBinding wb = w.params;
  auto theta_at = [&](double tau) {
    wb["tau"] = tau;
    return symcore::evaluate_real(w.weight, wb);
  };
  double worst = 0;
  for (const auto& pr : probes) {
    evolve::EvolutionConfig cfg;
    cfg.generator = H;
    cfg.params = params;
    cfg.q = q;
    cfg.tau0 = pr.tau;
    cfg.tau1 = pr.tau + h_tau;
    cfg.h_tau = h_tau;
    cfg.foot = evolve::FootPointRule::evaluate;
    auto t = evolve::evolve([&pr](double x) { return pr(x); }, cfg);
    auto s = evolve::norm_series(t);
    const double n0 = theta_at(s.front().tau) * s.front().p_standard;
    const double n1 = theta_at(s.back().tau) * s.back().p_standard;
    worst = std::max(worst, std::abs(std::log(n1 / n0)) / (s.back().tau - s.front().tau));
  }
  return worst;
}

double EquivalenceReport::max_spread() const {
  double m = 0;
  for (const auto& r : ratios) m = std::max(m, r.stats.relative_spread);
  return m;
}

nlohmann::json EquivalenceReport::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  for (const auto& [o, e] : dyson_exponent) j["dyson_exponent"][models::to_string(o)] = e;
  j["ratios"] = nlohmann::json::array();
  for (const auto& r : ratios) {
    j["ratios"].push_back({{"name", r.name},
                           {"metric", r.metric},
                           {"mean", {r.stats.mean.real(), r.stats.mean.imag()}},
                           {"relative_spread", r.stats.relative_spread}});
  }
  return j;
}

namespace {

Eigen::MatrixXcd times_exp_tau(const wavefield::WaveField& f, double s) {
  Eigen::MatrixXcd v = f.values;
  for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) *= std::exp(s * f.grid->tau.nodes[static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

EquivalenceReport ordering_equivalence(const models::ThermoModel& m,
                                       const std::map<models::Ordering, wavefield::WaveField>& fields) {
  using models::Ordering;
  for (auto o : models::kAllOrderings) {
    if (!fields.count(o)) throw MissingField(std::string("no field for ordering ") + models::to_string(o));
  }
  auto [c1, c2] = quantize::select_constraints(m);
  EquivalenceReport rep;
  rep.model = m.name;
  std::map<Ordering, double> s;
  for (auto o : models::kAllOrderings) {
    DysonMap eta = matching_dyson_map(generator_from_constraint(quantize::promote(c1, o)));
    const Expr exponent = simplify(symcore::differentiate(eta.eta, "tau") * eta.inverse);
    rep.dyson_exponent[o] = to_string(exponent);
    RealBinding b = m.parameters;
    s[o] = symcore::evaluate_real(exponent, b);
  }
  const auto& qp = fields.at(Ordering::qp_first);
  for (auto o : {Ordering::symmetric, Ordering::pq_first}) {
    const auto& f = fields.at(o);
    wavefield::require_same_grid(f, qp);
    rep.ratios.push_back({"eta_" + std::string(models::to_string(o)) + "*psi_" + models::to_string(o) + "/psi_qp_first",
                          "standard", quantize::ratio_stats(times_exp_tau(f, s[o]), qp.values)});
  }
  const auto& sy = fields.at(Ordering::symmetric);
  rep.ratios.push_back({"psi_pq_first*exp((s_pq - s_symmetric)*tau)/psi_symmetric", "standard",
                        quantize::ratio_stats(times_exp_tau(fields.at(Ordering::pq_first), s[Ordering::pq_first] - s[Ordering::symmetric]),
                                              sy.values)});
  return rep;
}

EquivalenceReport ordering_equivalence(const models::ThermoModel& m, std::shared_ptr<const wavefield::Grid2D> grid) {
  std::map<models::Ordering, wavefield::WaveField> fields;
  for (auto o : models::kAllOrderings) fields[o] = quantize::reconstruct_wavefunction(m, o, grid).field;
  return ordering_equivalence(m, fields);
}

}  // namespace thermoquant::pseudoherm
