#include "adamlab/config.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_SUITE_BEGIN("config");

namespace {

json minimal_config() {
  return json{{"version", "1"},
              {"seed", 42},
              {"objective", {{"kind", "quadratic"}, {"dim", 1}}},
              {"hp", {{"a", 1.0}, {"b", 1.0}, {"gamma", 1.0}, {"sigma", 1.0}, {"eps", 0.5}}}};
}

}  // namespace

TEST_CASE("minimal config parses and round-trips") {
  json j = minimal_config();
  j["discrete"] = {{"h", 0.01},
                   {"steps", 10},
                   {"noise_mode", "closure"},
                   {"init", {{"x", {1.0}}, {"z", {0.0}}, {"y", {0.5}}}}};
  const auto cfg = parse_config(j);
  CHECK(cfg.seed == 42);
  CHECK(cfg.hp.eps == 0.5);
  REQUIRE(cfg.discrete.has_value());
  CHECK(cfg.discrete->steps == 10);
  // serialize -> parse is the identity on the normalized form
  const json out = to_json(cfg);
  const auto cfg2 = parse_config(out);
  CHECK(to_json(cfg2) == out);
}

TEST_CASE("missing keys are named") {
  json j = minimal_config();
  j["hp"].erase("a");
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hp.a") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected") {
  json j = minimal_config();
  j["hp"]["typo"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  json j2 = minimal_config();
  j2["unexpected_block"] = 1;
  CHECK_THROWS_AS(parse_config(j2), ConfigError);
}

TEST_CASE("version field is required") {
  json j = minimal_config();
  j.erase("version");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["version"] = "999";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("objective descriptors construct the right builtins") {
  const auto quad = objective_from_json(json{{"kind", "quadratic"}, {"dim", 2}, {"scale", 2.0}});
  CHECK(quad->kind() == "quadratic");
  CHECK(quad->lipschitz() == doctest::Approx(2.0));

  const auto qc = objective_from_json(json{{"kind", "quad_cosine"}, {"m_q", 1.0}, {"s", 0.5}, {"dim", 2}});
  CHECK(qc->kind() == "quad_cosine");
  CHECK(qc->dim() == 2);
  CHECK(qc->lipschitz() == doctest::Approx(1.5));

  const auto lin = objective_from_json(json{{"kind", "linear"}, {"g", {1.0, -2.0}}});
  CHECK(lin->kind() == "linear");
  CHECK_FALSE(lin->dissipative());

  const auto full = objective_from_json(
      json{{"kind", "quadratic"}, {"Q", {{2.0, 0.0}, {0.0, 1.0}}}, {"q", {0.5, -0.5}}});
  CHECK(full->lipschitz() == doctest::Approx(2.0));
  CHECK(full->dissipativity() == doctest::Approx(1.0));
}

TEST_CASE("malformed objectives are rejected") {
  CHECK_THROWS_AS(objective_from_json(json{{"kind", "mystery"}}), ConfigError);
  CHECK_THROWS_AS(objective_from_json(json{{"kind", "quad_cosine"}, {"m_q", 1.0}}), ConfigError);
  CHECK_THROWS_AS(objective_from_json(json{{"kind", "quadratic"}, {"dim", 1}, {"bad", 0}}), ConfigError);
}

TEST_CASE("config hash is stable and key-order independent") {
  const json a = minimal_config();
  json b;
  b["hp"] = {{"eps", 0.5}, {"sigma", 1.0}, {"gamma", 1.0}, {"b", 1.0}, {"a", 1.0}};
  b["objective"] = {{"dim", 1}, {"kind", "quadratic"}};
  b["seed"] = 42;
  b["version"] = "1";
  CHECK(config_hash(a) == config_hash(b));
  json c = a;
  c["seed"] = 43;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_SUITE_END();
