#include "thermoquant/models/model.hpp"

#include <cmath>
#include <limits>

#include "thermoquant/errors.hpp"
#include "thermoquant/symcore/parse.hpp"

namespace thermoquant::models {

using symcore::parse;

const char* to_string(Ordering o) {
  switch (o) {
    case Ordering::symmetric:
      return "symmetric";
    case Ordering::qp_first:
      return "qp_first";
    case Ordering::pq_first:
      return "pq_first";
  }
  return "symmetric";
}

Ordering parse_ordering(std::string_view s) {
  if (s == "symmetric" || s == "sym") return Ordering::symmetric;
  if (s == "qp" || s == "qp_first") return Ordering::qp_first;
  if (s == "pq" || s == "pq_first") return Ordering::pq_first;
  throw OrderingUnsupported("unknown ordering '" + std::string(s) + "'");
}

void DomainBox::validate(double q_floor) const {
  for (double v : {tau_min, tau_max, q_min, q_max}) {
    if (!std::isfinite(v)) throw DomainError("domain bounds must be finite");
  }
  if (!(tau_min < tau_max)) throw DomainError("tau_min must be below tau_max");
  if (!(q_min > 0.0 && q_min < q_max)) throw DomainError("need 0 < q_min < q_max");
  if (!(q_min > q_floor)) throw DomainError("q_min must exceed the excluded volume w");
}

bool DomainBox::contains(double tau, double q) const {
  return tau >= tau_min && tau <= tau_max && q >= q_min && q <= q_max;
}

double ThermoModel::parameter(const std::string& n) const {
  auto it = parameters.find(n);
  if (it == parameters.end()) throw UnboundSymbol(n);
  return it->second;
}

RealBinding ThermoModel::binding(double tau, double q) const {
  RealBinding b = parameters;
  b["tau"] = tau;
  b["q"] = q;
  return b;
}

bool ThermoModel::operator==(const ThermoModel& o) const {
  if (name != o.name || mapping != o.mapping || parameters != o.parameters ||
      !(domain == o.domain) || !(internal_energy == o.internal_energy) ||
      state_equations.size() != o.state_equations.size() ||
      constraints.size() != o.constraints.size()) {
    return false;
  }
  for (std::size_t i = 0; i < state_equations.size(); ++i) {
    if (!(state_equations[i] == o.state_equations[i])) return false;
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (constraints[i].name != o.constraints[i].name ||
        !(constraints[i].expr == o.constraints[i].expr)) {
      return false;
    }
  }
  return true;
}

const RealBinding& default_parameters() {
  static const RealBinding d{{"kB", 1.0}, {"bbar", 1.0}, {"A", 1.0},      {"sigma", 1.0},
                             {"xi", 1.0}, {"K", 1.0},    {"u0", 0.0},     {"a", 0.1},
                             {"w", 0.1},  {"C", 0.0},    {"sigma_q", 1.0}, {"sigma_p", 1.0}};
  return d;
}

namespace {

RealBinding pick(std::initializer_list<const char*> names) {
  RealBinding b;
  for (const char* n : names) b[n] = default_parameters().at(n);
  return b;
}

std::vector<Constraint> make_constraints(std::initializer_list<std::pair<const char*, const char*>> cs) {
  std::vector<Constraint> out;
  for (const auto& [n, e] : cs) out.push_back(Constraint::make(n, parse(e), symcore::standard_pairs()));
  return out;
}

std::vector<Expr> parse_all(std::initializer_list<const char*> es) {
  std::vector<Expr> out;
  for (const char* e : es) out.push_back(parse(e));
  return out;
}

const std::map<std::string, std::string> kMapping{{"s", "tau"}, {"T", "pi"}, {"v", "q"}, {"P", "-p"}};

}  // namespace

std::vector<std::string> builtin_names() {
  return {"ideal_gas", "van_der_waals", "photon_first_class", "photon_isentropic"};
}

ThermoModel builtin(std::string_view name) {
  ThermoModel m;
  m.name = std::string(name);
  m.mapping = kMapping;
  if (name == "ideal_gas") {
    m.parameters = pick({"kB", "bbar", "A"});
    m.constraints = make_constraints({{"phi1", "pi + p*q/kB"},
                                      {"phi2", "p + A*exp(2*tau/(3*kB))*q^(-5/3)"}});
    m.internal_energy = parse("(3/2)*A*exp(2*tau/(3*kB))*q^(-2/3)");
    m.state_equations = parse_all({"kB*pi + p*q", "pi - 2*u/(3*kB)"});
    m.log_modulus = {{Ordering::symmetric, parse("-tau/(2*kB)")},
                     {Ordering::qp_first, Expr(0)},
                     {Ordering::pq_first, parse("-tau/kB")}};
  } else if (name == "van_der_waals") {
    m.parameters = pick({"kB", "bbar", "A", "a", "w"});
    m.constraints = make_constraints(
        {{"phi1", "pi + (q - w)*(p - a/q^2)/kB"},
         {"phi2", "p - a/q^2 + A*exp(2*tau/(3*kB))*(q - w)^(-5/3)"}});
    m.internal_energy = parse("(3/2)*A*exp(2*tau/(3*kB))*(q - w)^(-2/3) - a/q");
    m.state_equations = parse_all({"pi - 2*(u + a/q)/(3*kB)", "p - a/q^2 + pi*kB/(q - w)"});
    m.log_modulus = {{Ordering::symmetric, parse("-tau/(2*kB)")},
                     {Ordering::qp_first, Expr(0)},
                     {Ordering::pq_first, parse("-tau/kB")}};
  } else if (name == "photon_first_class") {
    m.parameters = pick({"kB", "bbar", "K", "u0"});
    m.constraints = make_constraints({{"phi1", "pi - (4*K/3)*tau^(1/3)*q^(-1/3)"},
                                      {"phi2", "-p - (K/3)*tau^(4/3)*q^(-4/3)"}});
    m.internal_energy = parse("K*tau^(4/3)*q^(-1/3) + u0");
    m.state_equations = parse_all({"pi - (4*K/3)*tau^(1/3)*q^(-1/3)",
                                   "-p - (K/3)*tau^(4/3)*q^(-4/3)"});
    m.log_modulus = {{Ordering::symmetric, Expr(0)},
                     {Ordering::qp_first, Expr(0)},
                     {Ordering::pq_first, Expr(0)}};
  } else if (name == "photon_isentropic") {
    m.parameters = pick({"kB", "bbar", "sigma", "xi", "u0", "C", "sigma_q", "sigma_p"});
    m.constraints = make_constraints({{"phi1", "p + (sigma/3)*pi^4"}, {"phi2", "xi*q^(-4/3) + p"}});
    m.internal_energy = parse("3*xi*q^(-1/3) + u0");
    m.state_equations = parse_all({"-p*q^(4/3) - xi", "-p - sigma*pi^4/3"});
  } else {
    throw UnknownModel(std::string(name));
  }
  return m;
}

namespace {

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  if (!doc.is_object()) throw SchemaError("model document must be an object");
  auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const nlohmann::json& j, const char* what) {
  if (!j.is_string()) throw SchemaError(std::string("'") + what + "' must be a string");
  return j.get<std::string>();
}

double bound(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity" || s == "infinity") {
      return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf" || s == "-Infinity" || s == "-infinity") {
      return -std::numeric_limits<double>::infinity();
    }
  }
  throw SchemaError("domain bounds must be numbers");
}

std::pair<double, double> interval(const nlohmann::json& d, const char* key) {
  const auto& v = field(d, key);
  if (!v.is_array() || v.size() != 2) throw SchemaError(std::string("domain.") + key + " must be [lo, hi]");
  return {bound(v[0]), bound(v[1])};
}

}  // namespace

ThermoModel load_model(const nlohmann::json& doc) {
  ThermoModel m;
  m.name = string_field(field(doc, "name"), "name");

  const auto& params = field(doc, "parameters");
  if (!params.is_object()) throw SchemaError("'parameters' must be an object");
  for (const auto& [k, v] : params.items()) {
    if (!v.is_number()) throw SchemaError("parameter '" + k + "' must be a number");
    m.parameters[k] = v.get<double>();
  }

  const auto& mapping = field(doc, "mapping");
  if (!mapping.is_object()) throw SchemaError("'mapping' must be an object");
  for (const auto& [k, v] : mapping.items()) {
    std::string target = string_field(v, "mapping value");
    std::string bare = (!target.empty() && target[0] == '-') ? target.substr(1) : target;
    if (bare != "tau" && bare != "pi" && bare != "q" && bare != "p") {
      throw SchemaError("mapping target '" + target + "' is not a phase-space symbol");
    }
    m.mapping[k] = target;
  }

  const auto& dom = field(doc, "domain");
  auto [t0, t1] = interval(dom, "tau");
  auto [q0, q1] = interval(dom, "q");
  m.domain = {t0, t1, q0, q1};

  const auto& cs = field(doc, "constraints");
  if (!cs.is_array() || cs.empty()) throw SchemaError("'constraints' must be a non-empty array");
  for (const auto& c : cs) {
    std::string n = string_field(field(c, "name"), "constraint name");
    std::string e = string_field(field(c, "expr"), "constraint expr");
    m.constraints.push_back(Constraint::make(n, parse(e), symcore::standard_pairs()));
  }
  if (m.constraints.size() != 2) {
    throw SchemaError("expected 2 constraints (one per thermodynamic degree of freedom), got " +
                      std::to_string(m.constraints.size()));
  }

  m.internal_energy = parse(string_field(field(doc, "internal_energy"), "internal_energy"));
  const auto& se = field(doc, "state_equations");
  if (!se.is_array()) throw SchemaError("'state_equations' must be an array");
  for (const auto& s : se) m.state_equations.push_back(parse(string_field(s, "state equation")));

  auto w = m.parameters.find("w");
  m.domain.validate(w == m.parameters.end() ? 0.0 : w->second);
  return m;
}

ThermoModel load_model_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  return load_model(doc);
}

nlohmann::json to_json(const ThermoModel& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["parameters"] = nlohmann::json::object();
  for (const auto& [k, v] : m.parameters) j["parameters"][k] = v;
  j["mapping"] = m.mapping;
  j["domain"] = {{"tau", {m.domain.tau_min, m.domain.tau_max}},
                 {"q", {m.domain.q_min, m.domain.q_max}}};
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : m.constraints) {
    j["constraints"].push_back({{"name", c.name}, {"expr", symcore::to_string(c.expr)}});
  }
  j["internal_energy"] = symcore::to_string(m.internal_energy);
  j["state_equations"] = nlohmann::json::array();
  for (const auto& s : m.state_equations) j["state_equations"].push_back(symcore::to_string(s));
  return j;
}

double internal_energy(const ThermoModel& m, double tau, double q) {
  if (!m.domain.contains(tau, q)) throw DomainError("point outside the model box");
  return symcore::evaluate_real(m.internal_energy, m.binding(tau, q));
}

}  // namespace thermoquant::models
