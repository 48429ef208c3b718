#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oid/config.hpp"
#include "oid/error.hpp"

using namespace oid;
namespace fs = std::filesystem;

TEST_CASE("defaults round trip") {
  RunConfig c;
  c.tagger.attention_heads = 3;
  c.adversarial.epsilon = 0.25;
  c.tagger_train.epochs = 7;
  c.pairing = Pairing::Mlp;
  c.experiments.sweep_sizes = {10, 20};
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.tagger.attention_heads == 3);
  CHECK(back.pairing == Pairing::Mlp);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_AS(run_config_from_json({{"tagerr", {}}}), ArgumentError);
  try {
    run_config_from_json({{"tagger", {{"encoder", {{"lstm_hiden", 3}}}}}});
    FAIL("expected ArgumentError");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("lstm_hiden") != std::string::npos);
  }
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS_AS(run_config_from_json({{"adversarial", {{"alpha", 2.0}}}}), ArgumentError);
  CHECK_THROWS_AS(run_config_from_json({{"tagger_train", {{"epochs", -1}}}}), ArgumentError);
  CHECK_THROWS_AS(run_config_from_json({{"tagger", {{"decoder", "greedy"}}}}), ArgumentError);
}

TEST_CASE("seed derivation") {
  RunConfig a, b;
  a.apply_seed(3);
  b.apply_seed(3);
  CHECK(to_json(a) == to_json(b));
  b.apply_seed(4);
  CHECK(to_json(a) != to_json(b));
  CHECK(a.tagger_train.seed != a.existence_train.seed);
}

TEST_CASE("config resolution order") {
  const auto dir = fs::temp_directory_path() / "oid_config_test";
  fs::create_directories(dir);
  const auto env_path = dir / "env.json";
  const auto explicit_path = dir / "explicit.json";
  std::ofstream(env_path) << R"({"tagger": {"attention_heads": 5}})";
  std::ofstream(explicit_path) << R"({"tagger": {"attention_heads": 6}})";

  ::unsetenv(kConfigEnvVar);
  CHECK(resolve_run_config(std::nullopt).tagger.attention_heads == RunConfig{}.tagger.attention_heads);
  ::setenv(kConfigEnvVar, env_path.c_str(), 1);
  CHECK(resolve_run_config(std::nullopt).tagger.attention_heads == 5);
  CHECK(resolve_run_config(explicit_path).tagger.attention_heads == 6);
  ::unsetenv(kConfigEnvVar);
  CHECK_THROWS(load_run_config(dir / "missing.json"));
  fs::remove_all(dir);
}

TEST_CASE("shipped compact config loads") {
  const fs::path shipped = fs::path(OID_SOURCE_DIR) / "configs" / "compact.json";
  auto c = load_run_config(shipped);
  CHECK(c.tagger.encoder.word_dim == c.embeddings.dimension);
  CHECK(c.existence.encoder.word_dim == c.embeddings.dimension);
}
