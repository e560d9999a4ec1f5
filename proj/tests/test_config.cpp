#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "normgrid/config.hpp"

using namespace normgrid;
using nlohmann::json;

namespace {

ConfigOverrides cli(const std::string& scenario, std::uint64_t seed) {
  ConfigOverrides o;
  o.scenario = scenario;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("minimal config resolves to full-scale defaults") {
  const ExperimentConfig cfg = resolve_config(json::object(), cli("exp1", 7));
  CHECK(cfg.scenario == "exp1");
  CHECK(cfg.seed == 7);
  CHECK(cfg.scale == "paper");
  CHECK(cfg.out_dir == "out/exp1");
  CHECK(cfg.grid_width == 20);
  CHECK(cfg.grid_height == 20);
  CHECK(cfg.agents == 5);
  CHECK(cfg.trees == 15);
  CHECK(cfg.episode_length == 1000);
  CHECK(cfg.training_episodes == 30000);
  CHECK(cfg.eval_episodes == 100);
  CHECK(cfg.compliance_fraction == 0.8);
  CHECK(cfg.compliant_count() == 4);
  CHECK(cfg.boycott == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK(cfg.regulation.quota == 3.0);
  CHECK(cfg.regulation.tau == 2.0);
  CHECK(cfg.regulation.window == 3);
  CHECK(cfg.detector.kind == "quota");
  CHECK(cfg.detector.corpus == "quota");
  CHECK(cfg.capabilities.compliant == std::vector<int>{3});
  CHECK(cfg.capabilities.defective == std::vector<int>{5});
  CHECK(cfg.config_hash.size() == 16);

  const ExperimentConfig egta = resolve_config(json::object(), cli("egta", 7));
  CHECK(egta.agents == 10);
  CHECK(egta.egta.replicates == 3);
  CHECK(egta.egta.before_b == 0.0);
  CHECK(egta.egta.after_b == 2.0);

  const ExperimentConfig exp2 = resolve_config(json::object(), cli("exp2", 7));
  CHECK(exp2.detector.kind == "learned");
  CHECK(exp2.detector.corpus == "cadence");
  CHECK(exp2.capabilities.weak == std::vector<int>{3, 2});
  CHECK(exp2.capabilities.strong == std::vector<int>{5});
}

TEST_CASE("desk scale overlays the documented bundle") {
  ConfigOverrides o = cli("exp1", 3);
  o.scale = "desk";
  const ExperimentConfig cfg = resolve_config(json::object(), o);
  CHECK(cfg.scale == "desk");
  CHECK(cfg.grid_width == 12);
  CHECK(cfg.agents == 5);  // exp1 keeps its roster size
  CHECK(cfg.trees == 6);
  CHECK(cfg.episode_length == 200);
  CHECK(cfg.training_episodes == 2000);
  CHECK(cfg.eval_episodes == 50);
  CHECK(cfg.boycott == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(cfg.detector.traces_per_class == 300);

  ConfigOverrides oe = cli("egta", 3);
  oe.scale = "desk";
  CHECK(resolve_config(json::object(), oe).agents == 6);
}

TEST_CASE("explicit file keys beat the desk bundle") {
  ConfigOverrides o = cli("exp1", 3);
  o.scale = "desk";
  json file = {{"episode_length", 300}};
  const ExperimentConfig cfg = resolve_config(file, o);
  CHECK(cfg.episode_length == 300);    // file wins over bundle
  CHECK(cfg.training_episodes == 2000);  // untouched keys keep bundle values

  // CLI flags beat the file.
  json with_seed = {{"seed", 1}, {"out_dir", "custom"}};
  const ExperimentConfig flags = resolve_config(with_seed, cli("exp1", 99));
  CHECK(flags.seed == 99);
  CHECK(flags.out_dir == "custom");

  // scale can come from the file when the flag is absent.
  json desk_file = {{"scale", "desk"}};
  const ExperimentConfig from_file = resolve_config(desk_file, cli("exp1", 1));
  CHECK(from_file.episode_length == 200);
}

TEST_CASE("seeds are mandatory and validated") {
  CHECK_THROWS_WITH(resolve_config(json::object(), {.scenario = "exp1"}),
                    Catch::Matchers::ContainsSubstring("seed"));
  json negative = {{"seed", -4}};
  CHECK_THROWS_AS(resolve_config(negative, {.scenario = "exp1"}), ConfigError);
  json fractional = {{"seed", 1.5}};
  CHECK_THROWS_AS(resolve_config(fractional, {.scenario = "exp1"}), ConfigError);

  json in_file = {{"seed", 12}};
  CHECK(resolve_config(in_file, {.scenario = "exp1"}).seed == 12);
}

TEST_CASE("scenario comes from the subcommand and must match the file") {
  json file = {{"scenario", "exp2"}, {"seed", 1}};
  CHECK_THROWS_WITH(resolve_config(file, {.scenario = "exp1"}),
                    Catch::Matchers::ContainsSubstring("does not match"));
  CHECK(resolve_config(file, {.scenario = "exp2"}).scenario == "exp2");
  CHECK(resolve_config(file, {}).scenario == "exp2");  // file alone suffices
  CHECK_THROWS_WITH(resolve_config({{"seed", 1}}, {}),
                    Catch::Matchers::ContainsSubstring("scenario"));
  json bogus = {{"scenario", "exp3"}, {"seed", 1}};
  CHECK_THROWS_AS(resolve_config(bogus, {}), ConfigError);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  json file = {{"learner", {{"alpa", 0.2}}}};
  CHECK_THROWS_WITH(resolve_config(file, cli("exp1", 1)),
                    Catch::Matchers::ContainsSubstring("learner.alpa"));
  json top = {{"grd", 12}};
  CHECK_THROWS_WITH(resolve_config(top, cli("exp1", 1)),
                    Catch::Matchers::ContainsSubstring("grd"));
}

TEST_CASE("constraint violations name the offending key") {
  const auto reject = [](json patch, const std::string& needle) {
    CHECK_THROWS_WITH(resolve_config(patch, cli("exp1", 1)),
                      Catch::Matchers::ContainsSubstring(needle));
  };
  reject({{"compliance_fraction", 1.2}}, "compliance_fraction");
  reject({{"grid", {{"width", 2}}}}, "grid");
  reject({{"boycott", {1.0, 1.0}}}, "distinct");
  reject({{"boycott", {-1.0}}}, "boycott");
  reject({{"learner", {{"gamma", 1.5}}}}, "learner.gamma");
  reject({{"learner", {{"replay_capacity", 4}}}}, "replay_capacity");
  reject({{"detector", {{"kind", "psychic"}}}}, "detector.kind");
  reject({{"detector", {{"test_fraction", 1.0}}}}, "test_fraction");
  reject({{"detector", {{"momentum", 1.0}}}}, "momentum");
  reject({{"detector_sweep", {{"lengths", {5, 5}}}}}, "ascending");
  reject({{"episode_length", 2.5}}, "episode_length");
  reject({{"agents", 200}, {"trees", 300}}, "agents/trees");
}

TEST_CASE("egta rosters must leave exactly two focal agents") {
  json bad = {{"compliance_fraction", 0.5}, {"agents", 6}};
  CHECK_THROWS_WITH(resolve_config(bad, cli("egta", 1)),
                    Catch::Matchers::ContainsSubstring("focal"));
  json good = {{"agents", 10}};
  CHECK(resolve_config(good, cli("egta", 1)).agents == 10);
}

TEST_CASE("boycott accepts a bare number as a one-point sweep") {
  json file = {{"boycott", 1.5}};
  CHECK(resolve_config(file, cli("exp1", 1)).boycott == std::vector<double>{1.5});
}

TEST_CASE("config hash ignores output location but tracks content") {
  json a = {{"out_dir", "here"}};
  json b = {{"out_dir", "there"}};
  const auto ca = resolve_config(a, cli("exp1", 5));
  const auto cb = resolve_config(b, cli("exp1", 5));
  CHECK(ca.config_hash == cb.config_hash);

  const auto seeded = resolve_config(a, cli("exp1", 6));
  CHECK(seeded.config_hash != ca.config_hash);
  const auto tweaked = resolve_config({{"out_dir", "here"}, {"trees", 14}},
                                      cli("exp1", 5));
  CHECK(tweaked.config_hash != ca.config_hash);

  // The echo snapshot retains every effective key.
  CHECK(ca.effective["episode_length"] == 1000);
  CHECK(ca.effective["scenario"] == "exp1");
}

TEST_CASE("json files parse with path-bearing errors") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "normgrid_cfg_test";
  fs::create_directories(dir);
  const fs::path good = dir / "good.json";
  {
    std::ofstream out(good);
    out << R"({"seed": 4, "scenario": "exp1"})";
  }
  const ExperimentConfig cfg = load_config(good.string());
  CHECK(cfg.seed == 4);

  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{nope";
  }
  CHECK_THROWS_WITH(parse_json_file(bad.string()),
                    Catch::Matchers::ContainsSubstring("bad.json"));
  CHECK_THROWS_WITH(parse_json_file((dir / "missing.json").string()),
                    Catch::Matchers::ContainsSubstring("missing.json"));
  fs::remove_all(dir);
}
