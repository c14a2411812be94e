#include <gtest/gtest.h>

#include <cmath>

#include "thermoquant/errors.hpp"
#include "thermoquant/models/model.hpp"
#include "thermoquant/symcore/parse.hpp"

using namespace thermoquant;
using namespace thermoquant::models;
using symcore::parse;

namespace {

// Substitute T and P by du/dtau and -du/dq through the (pi, -p) mapping.
Expr on_state(const ThermoModel& m, const Expr& e) {
  const Expr& u = m.internal_energy;
  std::map<std::string, Expr, std::less<>> rep{{"pi", symcore::differentiate(u, "tau")},
                                               {"p", symcore::differentiate(u, "q")},
                                               {"u", u}};
  return symcore::simplify(symcore::substitute(e, rep));
}

}  // namespace

TEST(Builtin, ConstraintValueAtPoint) {
  auto m = builtin("ideal_gas");
  symcore::RealBinding b{{"tau", 1.0}, {"q", 1.0}, {"p", -1.0}, {"A", 1.0}, {"kB", 1.0}};
  // -1 + e^(2/3)
  EXPECT_NEAR(symcore::evaluate_real(m.constraints[1].expr, b), 0.9477340, 1e-7);
}

TEST(Builtin, Unknown) { EXPECT_THROW(builtin("plasma"), UnknownModel); }

TEST(Builtin, VanDerWaalsDegeneratesToIdealGas) {
  auto v = builtin("van_der_waals");
  auto g = builtin("ideal_gas");
  std::map<std::string, Expr, std::less<>> zero{{"a", Expr(0)}, {"w", Expr(0)}};
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(symcore::simplify(symcore::substitute(v.constraints[i].expr, zero)),
              g.constraints[i].expr);
  }
  EXPECT_EQ(symcore::simplify(symcore::substitute(v.internal_energy, zero)), g.internal_energy);
}

TEST(Builtin, StateEquationsHoldOnInternalEnergy) {
  for (const char* n : {"ideal_gas", "van_der_waals", "photon_first_class"}) {
    auto m = builtin(n);
    for (const auto& s : m.state_equations) {
      EXPECT_TRUE(on_state(m, s).is_zero()) << n << ": " << s;
    }
  }
}

TEST(Builtin, ConstraintsVanishOnStateSurface) {
  for (const char* n : {"ideal_gas", "van_der_waals", "photon_first_class"}) {
    auto m = builtin(n);
    for (const auto& c : m.constraints) EXPECT_TRUE(on_state(m, c.expr).is_zero()) << n << " " << c.name;
  }
}

TEST(Builtin, PhotonIsentropicConstraintsOnIsentrope) {
  auto m = builtin("photon_isentropic");
  // p = du/dq along the isentrope satisfies phi2.
  Expr p = symcore::differentiate(m.internal_energy, "q");
  EXPECT_TRUE(symcore::simplify(symcore::substitute(m.constraints[1].expr, "p", p)).is_zero());
}

TEST(InternalEnergy, Values) {
  EXPECT_NEAR(internal_energy(builtin("ideal_gas"), 1.0, 1.0), 2.9216011, 1e-7);
  auto v = builtin("van_der_waals");
  v.parameters["a"] = 0;
  v.parameters["w"] = 0;
  EXPECT_NEAR(internal_energy(v, 1.0, 1.0), internal_energy(builtin("ideal_gas"), 1.0, 1.0), 1e-15);
  EXPECT_DOUBLE_EQ(internal_energy(builtin("photon_first_class"), 1.0, 1.0), 1.0);
  EXPECT_THROW(internal_energy(builtin("ideal_gas"), 1.0, 5.0), DomainError);
}

TEST(Loader, RoundTrip) {
  for (const auto& n : builtin_names()) {
    auto m = builtin(n);
    auto back = load_model_text(to_json(m).dump());
    EXPECT_TRUE(back == m) << n;
  }
}

TEST(Loader, Errors) {
  auto j = to_json(builtin("ideal_gas"));
  auto inf = j;
  inf["domain"]["tau"] = {0.2, "inf"};
  EXPECT_THROW(load_model(inf), DomainError);
  auto missing = j;
  missing.erase("constraints");
  EXPECT_THROW(load_model(missing), SchemaError);
  auto bad_expr = j;
  bad_expr["constraints"][0]["expr"] = "pi + (q";
  EXPECT_THROW(load_model(bad_expr), ExpressionParseError);
  auto box = j;
  box["domain"]["q"] = {2.0, 1.0};
  EXPECT_THROW(load_model(box), DomainError);
  EXPECT_THROW(load_model_text("{not json"), SchemaError);
  auto vdw = to_json(builtin("van_der_waals"));
  vdw["domain"]["q"] = {0.05, 2.0};
  EXPECT_THROW(load_model(vdw), DomainError);
}

TEST(Ordering, Parse) {
  EXPECT_EQ(parse_ordering("qp"), Ordering::qp_first);
  EXPECT_EQ(parse_ordering("pq_first"), Ordering::pq_first);
  EXPECT_THROW(parse_ordering("weyl"), OrderingUnsupported);
}
