#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "thermoquant/cli/cli.hpp"
#include "thermoquant/constraints/constraints.hpp"
#include "thermoquant/errors.hpp"
#include "thermoquant/evolve/evolve.hpp"
#include "thermoquant/parallel.hpp"
#include "thermoquant/pseudoherm/pseudoherm.hpp"
#include "thermoquant/quantize/reconstruct.hpp"
#include "thermoquant/symcore/bracket.hpp"
#include "thermoquant/symcore/evaluate.hpp"
#include "thermoquant/wavefield/observables.hpp"

namespace thermoquant::cli {

using constraints::ClassificationResult;
using constraints::ClassifyOptions;
using models::Ordering;
using models::ThermoModel;
using quantize::CExpr;
using quantize::DifferentialOperator;
using symcore::Complex;
using symcore::Expr;
using symcore::RealBinding;
using wavefield::MetricWeight;
using wavefield::WaveField;

Format parse_format(std::string_view s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  if (s == "md" || s == "markdown") return Format::markdown;
  throw DomainError("unknown report format '" + std::string(s) + "'");
}

MetricChoice parse_metric(std::string_view s) {
  if (s == "standard") return MetricChoice::standard;
  if (s == "theta") return MetricChoice::theta;
  throw DomainError("unknown metric '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  if (n_tau < 5 || n_q < 5) throw GridTooCoarse("grid sizes must be at least 5");
  if (!(h_tau > 0)) throw DomainError("h_tau must be positive");
  const double all[] = {tol.algebra,       tol.residual_analytic, tol.residual_fd,   tol.ratio_spread,
                        tol.normalization, tol.expectation,       tol.theta_expectation, tol.defect,
                        tol.uncertainty_slack, tol.flow,          tol.metric_norm,   tol.quasi_hermitian,
                        tol.equivalence,   tol.characteristics,   tol.decay,         tol.convergence_ratio};
  for (double t : all) {
    if (!(t > 0)) throw DomainError("tolerances must be positive");
  }
}

std::pair<std::size_t, std::size_t> parse_grid(std::string_view s) {
  auto x = s.find_first_of("xX");
  auto number = [&](std::string_view part) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string_view::npos) {
      throw DomainError("grid must look like 201x201, got '" + std::string(s) + "'");
    }
    return static_cast<std::size_t>(std::stoull(std::string(part)));
  };
  if (x == std::string_view::npos) throw DomainError("grid must look like 201x201, got '" + std::string(s) + "'");
  return {number(s.substr(0, x)), number(s.substr(x + 1))};
}

nlohmann::json Check::to_json() const {
  nlohmann::json j{{"id", id},
                   {"value", value},
                   {"expected", expected},
                   {"tolerance", tolerance},
                   {"comparison", comparison}};
  j["pass"] = pass ? nlohmann::json(*pass) : nlohmann::json(nullptr);
  return j;
}

bool Report::hard_pass() const {
  for (const auto& c : checks) {
    if (c.pass && !*c.pass) return false;
  }
  return true;
}

int Report::exit_code() const { return hard_pass() && !undetermined ? 0 : 2; }

nlohmann::json Report::to_json() const {
  nlohmann::json j = sections;
  j["command"] = command;
  j["model"] = model;
  j["ordering"] = ordering ? nlohmann::json(models::to_string(*ordering)) : nlohmann::json(nullptr);
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back(c.to_json());
  j["artifacts"] = artifacts;
  j["undetermined"] = undetermined;
  j["all_hard_checks_pass"] = hard_pass();
  return j;
}

namespace {

std::string cell(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string pass_text(const std::optional<bool>& p) {
  if (!p) return "report";
  return *p ? "pass" : "FAIL";
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string Report::to_csv() const {
  std::ostringstream os;
  os << "id,value,expected,tolerance,comparison,pass\n";
  for (const auto& c : checks) {
    os << csv_quote(c.id) << ',' << csv_quote(cell(c.value)) << ',' << csv_quote(cell(c.expected)) << ','
       << nlohmann::json(c.tolerance).dump() << ',' << c.comparison << ',' << pass_text(c.pass) << '\n';
  }
  return os.str();
}

std::string Report::to_markdown() const {
  std::ostringstream os;
  os << "# " << command << ": " << model;
  if (ordering) os << " (" << models::to_string(*ordering) << ")";
  os << "\n\n| check | value | expected | tolerance | result |\n|---|---|---|---|---|\n";
  for (const auto& c : checks) {
    os << "| " << c.id << " | " << cell(c.value) << " | " << cell(c.expected) << " | "
       << nlohmann::json(c.tolerance).dump() << " | " << pass_text(c.pass) << " |\n";
  }
  os << "\nHard checks: " << (hard_pass() ? "all pass" : "failures present");
  if (undetermined) os << "; classification undetermined";
  os << "\n";
  if (!artifacts.empty()) {
    os << "\nArtifacts:\n";
    for (const auto& a : artifacts) os << "- " << a << "\n";
  }
  return os.str();
}

ThermoModel load(const std::string& source) {
  for (const auto& n : models::builtin_names()) {
    if (n == source) return models::builtin(source);
  }
  std::ifstream in(source);
  if (!in) throw UnknownModel("'" + source + "' is neither a builtin model nor a readable file");
  std::stringstream buf;
  buf << in.rdbuf();
  return models::load_model_text(buf.str());
}

std::string write_report(const Report& r, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::string path;
  std::string text;
  switch (cfg.format) {
    case Format::json:
      path = cfg.out_dir + "/report.json";
      text = r.to_json().dump(2) + "\n";
      break;
    case Format::csv:
      path = cfg.out_dir + "/report.csv";
      text = r.to_csv();
      break;
    case Format::markdown:
      path = cfg.out_dir + "/report.md";
      text = r.to_markdown();
      break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path);
  out << text;
  return path;
}

namespace {

nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

void below(Report& r, std::string id, double value, double tol) {
  r.checks.push_back({std::move(id), value, 0.0, tol, "below", std::isfinite(value) && value < tol});
}

void near(Report& r, std::string id, double value, double expected, double tol) {
  r.checks.push_back({std::move(id), value, expected, tol, "abs_diff", std::abs(value - expected) <= tol});
}

void near(Report& r, std::string id, Complex value, Complex expected, double tol) {
  r.checks.push_back({std::move(id), complex_json(value), complex_json(expected), tol, "abs_diff",
                      std::abs(value - expected) <= tol});
}

void at_least(Report& r, std::string id, double value, double tol) {
  r.checks.push_back({std::move(id), value, 0.0, tol, "at_least", std::isfinite(value) && value >= -tol});
}

void exact(Report& r, std::string id, nlohmann::json value, nlohmann::json expected) {
  bool ok = value == expected;
  r.checks.push_back({std::move(id), std::move(value), std::move(expected), 0.0, "exact", ok});
}

void report_only(Report& r, std::string id, nlohmann::json value, nlohmann::json expected, double tol,
                 std::string comparison) {
  r.checks.push_back({std::move(id), std::move(value), std::move(expected), tol, std::move(comparison), std::nullopt});
}

ClassifyOptions classify_options(const ThermoModel& m, std::uint64_t seed) {
  ClassifyOptions o;
  o.seed = seed;
  o.parameters = m.parameters;
  o.ranges["tau"] = {m.domain.tau_min, m.domain.tau_max};
  o.ranges["q"] = {m.domain.q_min, m.domain.q_max};
  return o;
}

std::optional<ClassificationResult> classify_model(const ThermoModel& m, const RunConfig& cfg, Report& r) {
  try {
    auto c = constraints::classify(m.constraints, symcore::standard_pairs(), classify_options(m, cfg.seed));
    r.sections["classification"] = c.to_json();
    if (c.any_undetermined()) r.undetermined = true;
    return c;
  } catch (const NotSolvableOnShell& e) {
    r.sections["classification"] = {{"error", e.what()}};
    r.undetermined = true;
    return std::nullopt;
  }
}

void classification_checks(const ClassificationResult& c, Report& r) {
  int undetermined = 0;
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    for (std::size_t k = i + 1; k < c.names.size(); ++k) {
      if (c.pair_class[i][k] == constraints::PairClass::undetermined) ++undetermined;
    }
  }
  exact(r, "classification.undetermined_pairs", undetermined, 0);
}

const char* kCoordinates[] = {"tau", "pi", "q", "p"};

void second_class_tables(const ThermoModel& m, const ClassificationResult& c, const RunConfig& cfg, Report& r) {
  std::vector<constraints::Constraint> sc;
  for (auto i : c.second_class_indices()) sc.push_back(m.constraints[i]);
  constraints::DiracBracket db(sc, symcore::standard_pairs(), classify_options(m, cfg.seed));
  r.sections["k_matrix"] = db.k().to_json();
  r.sections["k_inverse"] = db.k_inverse().to_json();
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = i + 1; k < 4; ++k) {
      Expr b = db(symcore::sym(kCoordinates[i]), symcore::sym(kCoordinates[k]));
      table.push_back({{"left", kCoordinates[i]}, {"right", kCoordinates[k]}, {"bracket", symcore::to_string(b)}});
    }
  }
  r.sections["dirac_brackets"] = table;
  for (std::size_t a = 0; a < sc.size(); ++a) {
    for (const char* x : kCoordinates) {
      Expr b = db(sc[a].expr, symcore::sym(x));
      exact(r, "dirac.constraint_bracket." + sc[a].name + "." + x, symcore::to_string(b), "0");
    }
  }
}

double parameter_or(const ThermoModel& m, const std::string& name, double fallback) {
  auto it = m.parameters.find(name);
  return it == m.parameters.end() ? fallback : it->second;
}

void realization_suite(const ThermoModel& m, Report& r) {
  quantize::SecondClassRealization sr;
  sr.sigma_q = parameter_or(m, "sigma_q", parameter_or(m, "sigma", 1.0));
  sr.sigma_p = parameter_or(m, "sigma_p", parameter_or(m, "sigma", 1.0));
  sr.xi = parameter_or(m, "xi", 1.0);
  sr.C = parameter_or(m, "C", 0.0);
  auto rep = quantize::verify_second_class_realization(sr);
  r.sections["realization"] = rep.to_json();
  for (const auto& c : rep.checks) {
    r.checks.push_back({"realization." + c.name, symcore::to_string(c.residual), "0", 0.0, "exact", c.pass});
  }
  exact(r, "realization.domain_ok", rep.domain_ok, true);
  report_only(r, "realization.sign_discrepancy", rep.sign_discrepancy, false, 0.0, "exact");
  report_only(r, "realization.engine_bracket_agrees", rep.engine_agrees, true, 0.0, "exact");
}

RealBinding at_tau(const RealBinding& params, double tau) {
  RealBinding b = params;
  b["tau"] = tau;
  return b;
}

double weight_at(const MetricWeight& w, double tau) { return symcore::evaluate_real(w.weight, at_tau(w.params, tau)); }

/// d/dtau of the log-modulus when it is a q-independent constant.
std::optional<double> log_modulus_slope(const wavefield::ClosedForm& cf) {
  Expr d = symcore::simplify(symcore::differentiate(cf.log_modulus, "tau"));
  if (symcore::depends_on(d, "tau") || symcore::depends_on(d, "q")) return std::nullopt;
  return symcore::evaluate_real(d, cf.params);
}

DifferentialOperator generator_for(const ThermoModel& m, Ordering o) {
  auto pair = quantize::select_constraints(m);
  return pseudoherm::generator_from_constraint(quantize::promote(pair.phi1, o));
}

std::string artifact(const RunConfig& cfg, Report& r, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  r.artifacts.push_back(name);
  return cfg.out_dir + "/" + name;
}

std::string ordering_tag(Ordering o) {
  switch (o) {
    case Ordering::symmetric: return "symmetric";
    case Ordering::qp_first: return "qp";
    case Ordering::pq_first: return "pq";
  }
  return "unknown";
}

void algebra_suite(const ThermoModel& m, const ClassificationResult& c, const RunConfig& cfg,
                   std::shared_ptr<const wavefield::Grid2D> grid, Report& r) {
  Ordering o = cfg.ordering;
  std::vector<DifferentialOperator> ops;
  nlohmann::json opj = nlohmann::json::array();
  for (const auto& k : m.constraints) {
    ops.push_back(quantize::promote(k, o));
    opj.push_back({{"name", k.name}, {"operator", ops.back().str()}, {"terms", ops.back().to_json()}});
  }
  r.sections["operators"] = opj;
  auto probes = quantize::gaussian_probes(grid, 8, cfg.seed);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::size_t k = i + 1; k < ops.size(); ++k) {
      std::string id = "algebra.commutator." + m.constraints[i].name + "." + m.constraints[k].name;
      const auto& sf = c.structure[i][k];
      if (!sf) {
        report_only(r, id, nullptr, nullptr, cfg.tol.algebra, "below");
        continue;
      }
      DifferentialOperator expected;
      if (sf->constraint >= 0) {
        expected = CExpr::imag(symcore::sym("bbar") * sf->factor) * ops[static_cast<std::size_t>(sf->constraint)];
      }
      below(r, id, quantize::commutator_defect(ops[i], ops[k], expected, probes, m.parameters), cfg.tol.algebra);
    }
  }
}

void first_class_suite(const ThermoModel& m, const ClassificationResult& c, const RunConfig& cfg, Report& r) {
  Ordering o = cfg.ordering;
  const auto& params = m.parameters;
  const double bbar = m.parameter("bbar");
  auto grid = wavefield::Grid2D::make(m.domain, cfg.n_tau, cfg.n_q);
  algebra_suite(m, c, cfg, grid, r);

  // reconstruction and residuals
  auto rec = quantize::reconstruct_wavefunction(m, o, grid);
  if (rec.ratio) {
    below(r, "reconstruction.ratio_spread", rec.ratio->relative_spread, cfg.tol.ratio_spread);
  }
  wavefield::write_csv(rec.field, artifact(cfg, r, "psi_" + ordering_tag(o) + ".csv"));
  auto res = quantize::residual_norms(m, o, rec.field);
  r.sections["residuals"] = res.to_json();
  below(r, "residual.phi1.analytic", res.phi1_analytic, cfg.tol.residual_analytic);
  below(r, "residual.phi2.analytic", res.phi2_analytic, cfg.tol.residual_analytic);
  report_only(r, "residual.phi1.finite_difference", res.phi1_fd, 0.0, cfg.tol.residual_fd, "below");
  report_only(r, "residual.phi2.finite_difference", res.phi2_fd, 0.0, cfg.tol.residual_fd, "below");

  auto cf = quantize::analytic_wavefunction(m, o);
  auto slope = log_modulus_slope(cf);
  cf.scale = 1.0;
  WaveField unit = WaveField::from_closed_form(grid, cf);
  const auto& box = m.domain;
  const double lq = box.q_max - box.q_min;
  auto modulus_sq = [&](double tau) {
    return std::exp(2.0 * symcore::evaluate_real(cf.log_modulus, at_tau(params, tau)));
  };

  // normalization of the unit-prefactor closed form
  auto standard = MetricWeight::standard();
  Complex alpha = wavefield::normalize(unit, standard).second;
  double alpha_sq = std::norm(alpha);
  if (slope) {
    double s = *slope;
    double integral = std::abs(s) < 1e-300
                          ? lq * (box.tau_max - box.tau_min) * modulus_sq(box.tau_min)
                          : lq * (modulus_sq(box.tau_max) - modulus_sq(box.tau_min)) / (2.0 * s);
    double closed = 1.0 / integral;
    near(r, "normalization.alpha_sq", alpha_sq, closed, cfg.tol.normalization * closed);
  } else {
    report_only(r, "normalization.alpha_sq", alpha_sq, nullptr, cfg.tol.normalization, "abs_diff");
  }

  // expectations and Hermiticity defects on the normalized reconstructed state
  DifferentialOperator h = generator_for(m, o);
  auto eta = pseudoherm::matching_dyson_map(h);
  auto theta = eta.metric(params, "theta");
  DifferentialOperator varpi = pseudoherm::transform_generator(h, eta);
  auto psi = wavefield::normalize(rec.field, standard).first;
  auto psi_theta = wavefield::normalize(rec.field, theta).first;
  const auto pi_hat = DifferentialOperator::pi_hat();
  Complex pi_exp = wavefield::expectation(pi_hat, psi, standard, params);
  if (slope) {
    near(r, "expectation.im_pi", pi_exp.imag(), -bbar * *slope, cfg.tol.expectation);
  } else {
    report_only(r, "expectation.im_pi", pi_exp.imag(), nullptr, cfg.tol.expectation, "abs_diff");
  }
  near(r, "expectation.identity", wavefield::expectation(DifferentialOperator::identity(), psi, standard, params),
       Complex(1.0, 0.0), cfg.tol.expectation);
  below(r, "expectation.theta.im_varpi", std::abs(wavefield::expectation(varpi, psi_theta, theta, params).imag()),
        cfg.tol.theta_expectation);

  const auto& table_metric = cfg.metric == MetricChoice::theta ? theta : standard;
  const auto& table_state = cfg.metric == MetricChoice::theta ? psi_theta : psi;
  nlohmann::json table = nlohmann::json::array();
  const std::pair<const char*, DifferentialOperator> observables[] = {
      {"tau", DifferentialOperator::tau_hat()}, {"pi", pi_hat},
      {"q", DifferentialOperator::q_hat()},     {"p", DifferentialOperator::p_hat()},
      {"generator", h},                         {"varpi", varpi}};
  for (const auto& [name, op] : observables) {
    table.push_back({{"observable", name},
                     {"metric", table_metric.label},
                     {"value", complex_json(wavefield::expectation(op, table_state, table_metric, params))}});
  }
  r.sections["expectations"] = table;

  if (slope) {
    Complex shift(0.0, 2.0 * bbar * *slope);
    near(r, "hermiticity.generator", wavefield::hermiticity_defect(h, psi, standard, params), -shift,
         cfg.tol.defect);
    near(r, "hermiticity.pi", wavefield::hermiticity_defect(pi_hat, psi, standard, params), shift, cfg.tol.defect);
  }
  near(r, "hermiticity.phi1",
       wavefield::hermiticity_defect(quantize::promote(quantize::select_constraints(m).phi1, o), psi, standard,
                                     params),
       Complex(0.0, 0.0), cfg.tol.defect);

  // uncertainty relations on seeded kinematical states
  auto states = wavefield::gaussian_states(grid, cfg.uncertainty_states, cfg.seed);
  const auto q_hat = DifferentialOperator::q_hat(), p_hat = DifferentialOperator::p_hat();
  const auto tau_hat = DifferentialOperator::tau_hat();
  std::vector<std::vector<double>> rows(states.size());
  parallel_for(0, states.size(), [&](std::size_t i) {
    const auto& st = states[i];
    auto spread = [&](const DifferentialOperator& op) {
      try {
        return wavefield::uncertainty(op, st, standard, params);
      } catch (const ComplexExpectation&) {
        return static_cast<double>(NAN);
      }
    };
    double dq = spread(q_hat), dp = spread(p_hat), dt = spread(tau_hat), dpi = spread(pi_hat);
    double bqp = wavefield::robertson_bound(q_hat, p_hat, st, standard, params);
    double btp = wavefield::robertson_bound(tau_hat, pi_hat, st, standard, params);
    rows[i] = {static_cast<double>(i), dq, dp, dq * dp, bqp, dt, dpi, dt * dpi, btp};
  });
  double slack_qp = INFINITY, slack_tp = INFINITY;
  for (const auto& row : rows) {
    slack_qp = std::isnan(slack_qp) ? slack_qp : std::min(slack_qp, row[3] - row[4]);
    slack_tp = std::isnan(slack_tp) ? slack_tp : std::min(slack_tp, row[7] - row[8]);
    if (std::isnan(row[3])) slack_qp = NAN;
    if (std::isnan(row[7])) slack_tp = NAN;
  }
  wavefield::write_series_csv(artifact(cfg, r, "uncertainty.csv"),
                              {"state", "dq", "dp", "dq_dp", "bound_qp", "dtau", "dpi", "dtau_dpi", "bound_tau_pi"},
                              rows);
  at_least(r, "uncertainty.q_p.min_slack", slack_qp, cfg.tol.uncertainty_slack);
  at_least(r, "uncertainty.tau_pi.min_slack", slack_tp, cfg.tol.uncertainty_slack);
  auto maybe_uncertainty = [&](const DifferentialOperator& op) -> nlohmann::json {
    try {
      return wavefield::uncertainty(op, psi, standard, params);
    } catch (const ComplexExpectation&) {
      return nullptr;
    }
  };
  report_only(r, "uncertainty.physical.dq", maybe_uncertainty(q_hat), nullptr, 0.0, "report");
  report_only(r, "uncertainty.physical.dp", maybe_uncertainty(p_hat), nullptr, 0.0, "report");
  report_only(r, "uncertainty.physical.dtau", maybe_uncertainty(tau_hat), nullptr, 0.0, "report");
  auto ent = wavefield::entropic_uncertainty(m.internal_energy, psi, standard, params);
  report_only(r, "uncertainty.entropic.energy_slack", ent.energy_slack(), 0.0, 0.0, "at_least");
  report_only(r, "uncertainty.entropic.volume_slack", ent.volume_slack(), 0.0, 0.0, "at_least");

  // probability flow, unit prefactor per volume
  const auto conv = wavefield::FlowConvention::unit_prefactor_per_volume;
  std::vector<std::vector<double>> flow_rows;
  double flow_dev = 0, theta_dev = 0, theta_ref = 0;
  for (std::size_t k = 0; k < cfg.flow_samples; ++k) {
    double tau = box.tau_min + (static_cast<double>(k) + 0.5) / static_cast<double>(cfg.flow_samples) *
                                   (box.tau_max - box.tau_min);
    double p = wavefield::probability(unit, tau, standard, conv);
    double dp = wavefield::probability_flow(unit, tau, standard, conv);
    double pt = wavefield::probability(unit, tau, theta, conv);
    double expected = slope ? 2.0 * *slope * modulus_sq(tau) : NAN;
    flow_rows.push_back({tau, p, dp, expected, pt});
    if (slope) flow_dev = std::max(flow_dev, std::abs(dp - expected));
    if (k == 0) theta_ref = pt;
    theta_dev = std::max(theta_dev, std::abs(pt - theta_ref) / std::abs(theta_ref));
  }
  wavefield::write_series_csv(artifact(cfg, r, "flow.csv"), {"tau", "P", "dP_dtau", "expected_dP_dtau", "P_theta"},
                              flow_rows);
  r.sections["flow"] = {{"convention", wavefield::to_string(conv)}, {"samples", cfg.flow_samples}};
  if (slope) below(r, "flow.max_deviation", flow_dev, cfg.tol.flow);
  below(r, "flow.theta_norm_variation", theta_dev, cfg.tol.metric_norm);

  // pseudo-Hermitian layer
  exact(r, "pseudo_hermitian.transformed_generator", varpi.str(),
        generator_for(m, Ordering::qp_first).str());
  auto probes = pseudoherm::phase_probes(box, 6, cfg.seed);
  below(r, "pseudo_hermitian.quasi_hermitian_residual",
        pseudoherm::quasi_hermitian_residual(h, eta, probes, params, grid->q), cfg.tol.quasi_hermitian);
  auto eq = pseudoherm::ordering_equivalence(m, grid);
  r.sections["equivalence"] = eq.to_json();
  below(r, "pseudo_hermitian.ordering_equivalence_spread", eq.max_spread(), cfg.tol.equivalence);
}

}  // namespace

Report cmd_analyze(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  ThermoModel m = load(cfg.model_source);
  Report r;
  r.command = "analyze";
  r.model = m.name;
  auto c = classify_model(m, cfg, r);
  if (!c) {
    exact(r, "classification.determined", false, true);
    return r;
  }
  classification_checks(*c, r);
  if (!c->second_class_indices().empty()) second_class_tables(m, *c, cfg, r);
  return r;
}

Report cmd_verify(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  ThermoModel m = load(cfg.model_source);
  Report r;
  r.command = "verify";
  r.model = m.name;
  auto c = classify_model(m, cfg, r);
  if (!c) {
    exact(r, "classification.determined", false, true);
    return r;
  }
  classification_checks(*c, r);
  if (!c->second_class_indices().empty()) {
    second_class_tables(m, *c, cfg, r);
    realization_suite(m, r);
    return r;
  }
  r.ordering = cfg.ordering;
  first_class_suite(m, *c, cfg, r);
  return r;
}

Report cmd_evolve(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  ThermoModel m = load(cfg.model_source);
  Report r;
  r.command = "evolve";
  r.model = m.name;
  r.ordering = cfg.ordering;
  const auto& box = m.domain;

  DifferentialOperator h = generator_for(m, cfg.ordering);
  auto cf = quantize::analytic_wavefunction(m, cfg.ordering);
  auto slope = log_modulus_slope(cf);
  auto eta = pseudoherm::matching_dyson_map(h);
  auto theta = eta.metric(m.parameters, "theta");

  evolve::EvolutionConfig ec;
  ec.generator = h;
  ec.params = m.parameters;
  ec.tau0 = box.tau_min;
  ec.tau1 = std::min(box.tau_min + 1.0, box.tau_max);
  ec.h_tau = cfg.h_tau;
  ec.q = wavefield::Axis::make(box.q_min, box.q_max, cfg.n_q, wavefield::Scheme::gauss_legendre);
  ec.foot = evolve::FootPointRule::evaluate;
  const double tau0 = ec.tau0;
  auto psi0 = [&](double q) { return cf(tau0, q); };
  auto exact_field = [&](double tau, double q) { return cf(tau, q); };
  r.sections["evolution"] = {{"generator", h.str()},
                             {"tau0", ec.tau0},
                             {"tau1", ec.tau1},
                             {"h_tau", ec.h_tau},
                             {"n_q", cfg.n_q},
                             {"metric", theta.label},
                             {"theta_weight", symcore::to_string(theta.weight)}};

  ec.scheme = evolve::Scheme::characteristics;
  auto chars = evolve::evolve(psi0, ec);
  ec.scheme = evolve::Scheme::implicit_midpoint;
  auto coarse = evolve::evolve(psi0, ec);
  auto ec_fine = ec;
  ec_fine.h_tau = ec.h_tau / 2;
  auto fine = evolve::evolve(psi0, ec_fine);

  evolve::write_trajectory_csv(coarse, artifact(cfg, r, "trajectory_implicit_midpoint.csv"));
  evolve::write_trajectory_csv(chars, artifact(cfg, r, "trajectory_characteristics.csv"));
  auto series = evolve::norm_series(coarse);
  auto series_chars = evolve::norm_series(chars);
  evolve::write_norm_series_csv(series, artifact(cfg, r, "norm_series_implicit_midpoint.csv"));
  evolve::write_norm_series_csv(series_chars, artifact(cfg, r, "norm_series_characteristics.csv"));

  below(r, "evolve.characteristics.max_relative_error", evolve::max_relative_error(chars, exact_field),
        cfg.tol.characteristics);
  double e_coarse = evolve::max_relative_error(coarse, exact_field);
  double e_fine = evolve::max_relative_error(fine, exact_field);
  wavefield::write_series_csv(artifact(cfg, r, "convergence.csv"), {"h_tau", "max_relative_error"},
                              {{ec.h_tau, e_coarse}, {ec_fine.h_tau, e_fine}});
  report_only(r, "evolve.implicit_midpoint.max_relative_error", e_coarse, nullptr, 0.0, "report");
  report_only(r, "evolve.implicit_midpoint.max_relative_error_half_step", e_fine, nullptr, 0.0, "report");
  near(r, "evolve.implicit_midpoint.error_ratio_half_step", e_coarse / e_fine, 4.0, cfg.tol.convergence_ratio);

  // norm decay over the run in the selected metric
  auto metric_norm = [&](const evolve::NormPoint& p) {
    return cfg.metric == MetricChoice::theta ? p.p_standard * weight_at(theta, p.tau) : p.p_standard;
  };
  const auto& first = series.front();
  const auto& last = series.back();
  double ratio = metric_norm(last) / metric_norm(first);
  if (slope) {
    double rate = cfg.metric == MetricChoice::theta ? 0.0 : 2.0 * *slope;
    double expected = std::exp(rate * (last.tau - first.tau));
    near(r, "evolve.norm_ratio", ratio, expected, cfg.tol.decay * expected);
    below(r, "evolve.decay_rate_deviation", evolve::decay_rate_deviation(coarse, 2.0 * *slope), cfg.tol.decay);
  } else {
    report_only(r, "evolve.norm_ratio", ratio, nullptr, cfg.tol.decay, "abs_diff");
  }
  double theta_dev = 0;
  double ref = series_chars.front().p_standard * weight_at(theta, series_chars.front().tau);
  for (const auto& p : series_chars) {
    theta_dev = std::max(theta_dev, std::abs(p.p_standard * weight_at(theta, p.tau) - ref) / ref);
  }
  below(r, "evolve.theta_norm_variation", theta_dev, cfg.tol.metric_norm);
  return r;
}

}  // namespace thermoquant::cli
