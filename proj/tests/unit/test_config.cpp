#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "gdm/config.hpp"

using namespace gdm;

namespace {

Json parse(const std::string& s) { return parse_config_text(s, "test.json"); }

// Runs f, expecting a ConfigError whose message contains `needle`.
template <class F>
void expect_config_error(F&& f, const std::string& needle) {
  try {
    f();
    FAIL() << "expected ConfigError mentioning '" << needle << "'";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(ConfigParse, MalformedJsonReportsLineAndColumn) {
  const std::string text = "{\n  \"model\": {\n    \"kernel\": {\"kind\": \"exponential\",, }\n  }\n}\n";
  try {
    parse(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 38u);  // the second comma
    EXPECT_NE(std::string(e.what()).find("test.json:3:38"), std::string::npos) << e.what();
  }
}

TEST(ConfigParse, MissingFile) {
  expect_config_error([] { load_config_file("/nonexistent/config.json"); }, "cannot read");
}

TEST(ConfigParse, ShippedConfigsLoad) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(GDM_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const Json root = load_config_file(entry.path());
    EXPECT_NO_THROW(check_root_keys(root));
    if (root.contains("simulation")) {
      EXPECT_NO_THROW(simulation_from_root(root));
    }
    if (root.contains("pde")) {
      EXPECT_NO_THROW(pde_from_root(root));
    }
    if (study_section(root, "moments")) {
      EXPECT_NO_THROW(moment_study_from_root(root));
    }
    if (study_section(root, "scaling")) {
      EXPECT_NO_THROW(scaling_study_from_root(root));
    }
    if (study_section(root, "epsilon")) {
      EXPECT_NO_THROW(epsilon_study_from_root(root));
    }
    ++n;
  }
  EXPECT_GE(n, 9u);
}

TEST(ConfigModel, DefaultsToExampleParameters) {
  const auto p = model_from_root(parse("{}"));
  const auto e = example_params();
  EXPECT_EQ(p.domain.dimension, 2);
  EXPECT_DOUBLE_EQ(p.domain.upper[0], e.domain.upper[0]);
  EXPECT_DOUBLE_EQ(p.counting.variance(), 25.0);
  EXPECT_DOUBLE_EQ(p.kernel.beta, e.kernel.beta);
  EXPECT_DOUBLE_EQ(p.release_rate, 1.0);
}

TEST(ConfigModel, MeanDisplacementCalibratesBeta) {
  const auto p = model_from_root(parse(R"({"model": {"kernel": {"kind": "gaussian", "mean_displacement": 10}}})"));
  EXPECT_NEAR(p.kernel.beta, calibrate_beta(KernelKind::gaussian, 10.0, 2), 1e-12);
  expect_config_error(
      [] { model_from_root(parse(R"({"model": {"kernel": {"kind": "gaussian", "beta": 1, "mean_displacement": 10}}})")); },
      "model.kernel");
}

TEST(ConfigModel, UnknownKeysNameTheirPath) {
  expect_config_error([] { model_from_root(parse(R"({"model": {"kernel": {"kind": "exponential", "bta": 1}}})")); },
                      "model.kernel.bta: unknown key");
  expect_config_error([] { check_root_keys(parse(R"({"modle": {}})")); }, "modle: unknown key");
}

TEST(ConfigModel, BadValues) {
  expect_config_error([] { model_from_root(parse(R"({"model": {"kernel": {"kind": "cauchy"}}})")); },
                      "unknown value 'cauchy'");
  expect_config_error([] { model_from_root(parse(R"({"model": {"release_rate": "fast"}})")); },
                      "model.release_rate: expected a number");
  expect_config_error(
      [] { model_from_root(parse(R"({"model": {"counting": {"kind": "negative_binomial", "mean": 2, "variance": 2}}})")); },
      "counting variance must exceed mean");
}

TEST(ConfigSimulation, DefaultInitialPlantAtCenter) {
  const auto s = simulation_from_root(parse(R"({"simulation": {"plant_target": 10}})"));
  ASSERT_EQ(s.plants.positions.size(), 1u);
  EXPECT_DOUBLE_EQ(s.plants.positions[0][0], 0.0);
  EXPECT_EQ(s.config.plant_target, 10u);
  EXPECT_FALSE(s.kde.has_value());
}

TEST(ConfigSimulation, RequiresSectionAndChecksPlacement) {
  expect_config_error([] { simulation_from_root(parse("{}")); }, "simulation");
  expect_config_error(
      [] { simulation_from_root(parse(R"({"simulation": {"t_max": 1, "initial": {"plants": [[500, 0]]}}})")); },
      "outside the domain");
  expect_config_error(
      [] { simulation_from_root(parse(R"({"simulation": {"t_max": 1, "initial": {"plants": [[0]]}}})")); },
      "expected 2 coordinates");
}

TEST(ConfigSimulation, KdeNeedsPlanarBox) {
  const auto s = simulation_from_root(parse(R"({"simulation": {"t_max": 1, "kde": true}})"));
  ASSERT_TRUE(s.kde.has_value());
  EXPECT_EQ(s.kde->nx, 101u);
  const std::string one_d =
      R"({"model": {"domain": {"dimension": 1, "lower": 0, "upper": 1}, "kernel": {"kind": "exponential", "beta": 0.1}},
          "simulation": {"t_max": 1, "kde": {"nx": 10, "ny": 10}}})";
  expect_config_error([&] { simulation_from_root(parse(one_d)); }, "KDE maps need a 2D box");
}

TEST(ConfigPde, ReferenceDefaults) {
  const auto r = pde_from_root(parse(R"({"pde": {}})"));
  EXPECT_EQ(r.scheme, PdeScheme::direct);
  EXPECT_EQ(r.setup.nodes, 64u);
  EXPECT_DOUBLE_EQ(r.setup.theta, 1.0);
  EXPECT_EQ(r.setup.bc, BoundaryCondition::neumann);
}

TEST(ConfigPde, GridsMustAgree) {
  expect_config_error([] { pde_from_root(parse(R"({"pde": {"nx": 64, "ny": 32}})")); }, "pde.ny");
  EXPECT_EQ(pde_from_root(parse(R"({"pde": {"nx": 32, "ny": 32}})")).setup.nodes, 32u);
}

TEST(ConfigPde, StabilityViolationIsAConfigError) {
  // The reference rate is 10 |y - x| on [0, 1], so lambda_bar = 10.
  expect_config_error([] { pde_from_root(parse(R"({"pde": {"dt": 0.1}})")); }, "pde.dt: stability condition");
  EXPECT_NO_THROW(pde_from_root(parse(R"({"pde": {"dt": 0.09}})")));
}

TEST(ConfigPde, KillBoundaryMeansDirichlet) {
  const auto r = pde_from_root(parse(
      R"({"model": {"domain": {"dimension": 1, "lower": 0, "upper": 1, "boundary": "kill"},
                    "kernel": {"kind": "exponential", "beta": 0.1}, "rate": {"kind": "constant", "value": 1}}})"));
  EXPECT_EQ(r.setup.bc, BoundaryCondition::dirichlet);
}

TEST(ConfigPde, ReducedNeedsPositionOnlyRate) {
  expect_config_error([] { pde_from_root(parse(R"({"pde": {"scheme": "reduced"}})")); }, "reduced model");
  expect_config_error([] { pde_from_root(parse(R"({"model": {}, "pde": {}})")); }, "1D interval");
}

TEST(ConfigStudy, MomentAndScalingSections) {
  const auto m = moment_study_from_root(parse(R"({"study": {"moments": {"replicas": 50, "checkpoints": [0.5]}}})"));
  EXPECT_EQ(m.replicas, 50u);
  ASSERT_EQ(m.checkpoints.size(), 1u);
  expect_config_error([] { moment_study_from_root(parse(R"({"study": {"moments": {"replicas": 1}}})")); },
                      "study.moments.replicas");
  expect_config_error([] { scaling_study_from_root(parse(R"({"study": {"scaling": {"bins": 7}}})")); },
                      "bins must divide");
  expect_config_error([] { scaling_study_from_root(parse(R"({"study": {"scaling": {"K": [10.5]}}})")); },
                      "positive integers");
}
