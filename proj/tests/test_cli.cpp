#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "thermoquant/cli/cli.hpp"
#include "thermoquant/errors.hpp"
#include "thermoquant/parallel.hpp"

using namespace thermoquant;
using namespace thermoquant::cli;

namespace {

RunConfig config(const std::string& model, std::size_t n = 201) {
  RunConfig c;
  c.model_source = model;
  c.n_tau = c.n_q = n;
  c.out_dir = (std::filesystem::temp_directory_path() / "thermoquant_test_cli").string();
  return c;
}

const Check* find(const Report& r, const std::string& id) {
  for (const auto& c : r.checks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(Config, ParseGrid) {
  EXPECT_EQ(parse_grid("201x101"), std::make_pair(std::size_t{201}, std::size_t{101}));
  EXPECT_THROW(parse_grid("201"), DomainError);
  EXPECT_THROW(parse_grid("ax5"), DomainError);
}

TEST(Config, Validation) {
  auto c = config("ideal_gas", 4);
  EXPECT_THROW(c.validate(), GridTooCoarse);
  c = config("ideal_gas");
  c.tol.flow = 0;
  EXPECT_THROW(c.validate(), DomainError);
  EXPECT_THROW(parse_format("xml"), DomainError);
  EXPECT_EQ(parse_format("md"), Format::markdown);
  EXPECT_THROW(parse_metric("minkowski"), DomainError);
}

TEST(Load, BuiltinFileAndErrors) {
  EXPECT_EQ(load("van_der_waals").name, "van_der_waals");
  EXPECT_THROW(load("no_such_model"), UnknownModel);
  auto path = std::filesystem::temp_directory_path() / "thermoquant_broken.json";
  std::ofstream(path) << "{\"name\": \"x\", ";
  EXPECT_THROW(load(path.string()), SchemaError);
}

TEST(Analyze, FirstAndSecondClass) {
  auto r = cmd_analyze(config("ideal_gas"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(r.sections["classification"]["pairs"][0]["structure_function"], "kB^(-1)");
  EXPECT_FALSE(r.sections.contains("k_matrix"));
  auto s = cmd_analyze(config("photon_isentropic"));
  EXPECT_EQ(s.exit_code(), 0);
  EXPECT_TRUE(s.sections.contains("k_inverse"));
  EXPECT_EQ(s.sections["dirac_brackets"].size(), 6u);
}

TEST(Verify, FirstClassSuitePasses) {
  auto r = cmd_verify(config("ideal_gas"));
  EXPECT_TRUE(r.hard_pass());
  EXPECT_EQ(r.exit_code(), 0);
  ASSERT_NE(find(r, "expectation.im_pi"), nullptr);
  EXPECT_NEAR(find(r, "expectation.im_pi")->value.get<double>(), 0.5, 1e-9);
  const Check* fd = find(r, "residual.phi1.finite_difference");
  ASSERT_NE(fd, nullptr);
  EXPECT_FALSE(fd->pass.has_value());
  auto j = r.to_json();
  for (const char* key : {"model", "ordering", "checks", "artifacts"}) EXPECT_TRUE(j.contains(key)) << key;
  for (const auto& c : j["checks"]) {
    for (const char* key : {"id", "value", "expected", "tolerance", "pass"}) EXPECT_TRUE(c.contains(key)) << key;
  }
}

TEST(Verify, SecondClassRoutesToRealization) {
  auto r = cmd_verify(config("photon_isentropic"));
  EXPECT_FALSE(r.ordering.has_value());
  ASSERT_TRUE(r.sections.contains("realization"));
  const Check* flag = find(r, "realization.sign_discrepancy");
  ASSERT_NE(flag, nullptr);
  EXPECT_EQ(flag->value, true);
  EXPECT_FALSE(flag->pass.has_value());
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Verify, DeterministicAcrossThreadCounts) {
  auto a = config("van_der_waals");
  a.threads = 1;
  auto b = a;
  b.threads = 4;
  b.out_dir += "_b";
  std::string ja = cmd_verify(a).to_json().dump();
  std::string jb = cmd_verify(b).to_json().dump();
  set_threads(0);
  EXPECT_EQ(ja, jb);
}

TEST(Verify, CoarseGridReportsUnevaluableUncertainty) {
  auto r = cmd_verify(config("ideal_gas", 61));
  const Check* c = find(r, "uncertainty.q_p.min_slack");
  ASSERT_NE(c, nullptr);
  EXPECT_TRUE(std::isnan(c->value.get<double>()));
  EXPECT_EQ(c->pass, false);
  EXPECT_EQ(r.exit_code(), 2);
}

TEST(Verify, FailedHardCheckGivesExitTwo) {
  auto c = config("ideal_gas");
  c.tol.ratio_spread = 1e-30;
  auto r = cmd_verify(c);
  EXPECT_FALSE(r.hard_pass());
  EXPECT_EQ(r.exit_code(), 2);
}

TEST(Evolve, DecayAndTheta) {
  auto c = config("ideal_gas");
  auto r = cmd_evolve(c);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_NEAR(find(r, "evolve.norm_ratio")->value.get<double>(), std::exp(-1.0), 1e-3);
  c.metric = MetricChoice::theta;
  auto t = cmd_evolve(c);
  EXPECT_NEAR(find(t, "evolve.norm_ratio")->value.get<double>(), 1.0, 1e-3);
  EXPECT_THROW(cmd_evolve(config("photon_isentropic")), NotNormalForm);
}

TEST(Report, Formats) {
  Report r;
  r.command = "verify";
  r.model = "m";
  r.checks.push_back({"a.b", 1.5, 1.0, 1.0, "abs_diff", true});
  r.checks.push_back({"c", "x,y", nullptr, 0.0, "exact", std::nullopt});
  EXPECT_EQ(r.to_csv(), "id,value,expected,tolerance,comparison,pass\na.b,1.5,1.0,1.0,abs_diff,pass\nc,\"x,y\",null,0.0,exact,report\n");
  EXPECT_NE(r.to_markdown().find("| a.b | 1.5 | 1.0 | 1.0 | pass |"), std::string::npos);
  r.undetermined = true;
  EXPECT_EQ(r.exit_code(), 2);
}
