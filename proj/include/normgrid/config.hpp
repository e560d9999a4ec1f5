#pragma once
// Experiment configuration: a JSON schema with explicit defaults, a desk/paper
// scale overlay, strict unknown-key rejection and a content hash that stamps
// every output file.
//
// Precedence, highest first: CLI flags, config file keys, scale bundle,
// schema defaults. Schema defaults are full-scale values; the desk bundle
// shrinks grid, roster, horizon and sweep so a run fits on one core.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace normgrid {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegulationConfig {
  double quota = 3.0;
  double tau = 2.0;
  int window = 3;
};

struct LearnerConfig {
  double alpha = 0.1;
  double gamma = 0.95;
  int batch_size = 32;
  int replay_capacity = 5000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.6;  // share of training episodes spent decaying
};

struct CapabilityConfig {
  std::vector<int> compliant{3};
  std::vector<int> defective{5};
  std::vector<int> weak{3, 2};
  std::vector<int> strong{5};
};

struct DetectorConfig {
  std::string kind = "quota";  // none | quota | learned
  int sequence_length = 20;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::string corpus = "quota";  // quota | cadence | simulated
  int traces_per_class = 5000;
  int trace_length = 40;
  double test_fraction = 0.2;
  int max_windows_per_trace = 0;  // 0 = take every non-overlapping window
};

struct EgtaConfig {
  int replicates = 3;
  double before_b = 0.0;
  double after_b = 2.0;
  std::string payoff_fixture;  // path; non-empty switches to fixture mode
};

struct SweepConfig {
  std::vector<int> lengths{5, 10, 20, 40};
};

struct ExperimentConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string scale = "paper";
  int grid_width = 20;
  int grid_height = 20;
  int agents = 5;
  int trees = 15;
  int episode_length = 1000;
  int training_episodes = 30000;
  int eval_episodes = 100;
  double compliance_fraction = 0.8;
  std::vector<double> boycott{0.0, 0.5, 1.0, 1.5, 2.0};
  RegulationConfig regulation;
  LearnerConfig learner;
  CapabilityConfig capabilities;
  DetectorConfig detector;
  EgtaConfig egta;
  SweepConfig detector_sweep;

  json effective;           // full echo, defaults included
  std::string config_hash;  // 16 hex digits over `effective` minus out_dir

  int compliant_count() const {
    return static_cast<int>(compliance_fraction * agents);
  }
};

struct ConfigOverrides {
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> scale;
};

namespace detail {

inline json default_config(const std::string& scenario) {
  json j;
  j["scenario"] = scenario;
  j["seed"] = nullptr;  // mandatory, never defaulted
  j["out_dir"] = "out/" + scenario;
  j["scale"] = "paper";
  j["grid"] = {{"width", 20}, {"height", 20}};
  j["agents"] = scenario == "egta" ? 10 : 5;
  j["trees"] = 15;
  j["episode_length"] = 1000;
  j["training_episodes"] = 30000;
  j["eval_episodes"] = 100;
  j["compliance_fraction"] = 0.8;
  j["boycott"] = {0.0, 0.5, 1.0, 1.5, 2.0};
  j["regulation"] = {{"quota", 3.0}, {"tau", 2.0}, {"window", 3}};
  j["learner"] = {{"alpha", 0.1},
                  {"gamma", 0.95},
                  {"batch_size", 32},
                  {"replay_capacity", 5000},
                  {"epsilon_start", 1.0},
                  {"epsilon_end", 0.05},
                  {"epsilon_fraction", 0.6}};
  j["capabilities"] = {{"compliant", {3}},
                       {"defective", {5}},
                       {"weak", {3, 2}},
                       {"strong", {5}}};
  const char* det_kind = scenario == "exp2" ? "learned" : "quota";
  const char* det_corpus = scenario == "exp2" ? "cadence" : "quota";
  j["detector"] = {{"kind", det_kind},
                   {"sequence_length", 20},
                   {"epochs", 100},
                   {"batch_size", 32},
                   {"learning_rate", 0.05},
                   {"momentum", 0.9},
                   {"corpus", det_corpus},
                   {"traces_per_class", 5000},
                   {"trace_length", 40},
                   {"test_fraction", 0.2},
                   {"max_windows_per_trace", 0}};
  j["egta"] = {{"replicates", 3},
               {"before_b", 0.0},
               {"after_b", 2.0},
               {"payoff_fixture", ""}};
  j["detector_sweep"] = {{"lengths", {5, 10, 20, 40}}};
  return j;
}

inline json desk_overlay(const std::string& scenario) {
  json j;
  j["grid"] = {{"width", 12}, {"height", 12}};
  if (scenario == "egta") j["agents"] = 6;
  j["trees"] = 6;
  j["episode_length"] = 200;
  j["training_episodes"] = 2000;
  j["eval_episodes"] = 50;
  j["boycott"] = {0.0, 1.0, 2.0};
  j["detector"] = {{"traces_per_class", 300}};
  return j;
}

inline void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it->is_object()) {
      deep_merge(base[it.key()], *it);
    } else {
      base[it.key()] = *it;
    }
  }
}

inline void reject_unknown_keys(const json& node, const json& schema,
                                const std::string& path) {
  if (!node.is_object()) return;
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string here = path.empty() ? it.key() : path + "." + it.key();
    if (!schema.is_object() || !schema.contains(it.key())) {
      throw ConfigError("config: unknown key '" + here + "'");
    }
    if (schema[it.key()].is_object()) {
      if (!it->is_object()) {
        throw ConfigError("config: key '" + here + "' must be an object");
      }
      reject_unknown_keys(*it, schema[it.key()], here);
    }
  }
}

inline const json& require(const json& j, const std::string& key,
                           const std::string& path) {
  if (!j.contains(key)) {
    throw ConfigError("config: missing key '" + (path.empty() ? key : path + "." + key) +
                      "'");
  }
  return j[key];
}

inline int get_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number_integer()) {
    throw ConfigError("config: key '" + (path.empty() ? key : path + "." + key) +
                      "' must be an integer");
  }
  return v.get<int>();
}

inline double get_double(const json& j, const std::string& key,
                         const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) {
    throw ConfigError("config: key '" + (path.empty() ? key : path + "." + key) +
                      "' must be a number");
  }
  return v.get<double>();
}

inline std::string get_string(const json& j, const std::string& key,
                              const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) {
    throw ConfigError("config: key '" + (path.empty() ? key : path + "." + key) +
                      "' must be a string");
  }
  return v.get<std::string>();
}

inline std::vector<double> get_double_list(const json& j, const std::string& key,
                                           const std::string& path) {
  const json& v = require(j, key, path);
  const std::string here = path.empty() ? key : path + "." + key;
  if (!v.is_array() || v.empty()) {
    throw ConfigError("config: key '" + here + "' must be a non-empty array");
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError("config: key '" + here + "' must hold numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<int> get_int_list(const json& j, const std::string& key,
                                     const std::string& path) {
  const json& v = require(j, key, path);
  const std::string here = path.empty() ? key : path + "." + key;
  if (!v.is_array() || v.empty()) {
    throw ConfigError("config: key '" + here + "' must be a non-empty array");
  }
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError("config: key '" + here + "' must hold integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig resolve_config(json file, const ConfigOverrides& overrides) {
  if (!file.is_object()) throw ConfigError("config: top level must be an object");

  // Scenario: subcommand and file must agree when both are present.
  std::string scenario;
  if (file.contains("scenario")) {
    if (!file["scenario"].is_string()) {
      throw ConfigError("config: key 'scenario' must be a string");
    }
    scenario = file["scenario"].get<std::string>();
  }
  if (overrides.scenario) {
    if (!scenario.empty() && scenario != *overrides.scenario) {
      throw ConfigError("config: scenario '" + scenario +
                        "' does not match subcommand '" + *overrides.scenario + "'");
    }
    scenario = *overrides.scenario;
  }
  if (scenario.empty()) throw ConfigError("config: missing key 'scenario'");
  if (scenario != "exp1" && scenario != "exp2" && scenario != "egta" &&
      scenario != "detector") {
    throw ConfigError("config: key 'scenario' must be one of exp1, exp2, egta, detector");
  }

  std::string scale;
  if (file.contains("scale")) {
    if (!file["scale"].is_string()) {
      throw ConfigError("config: key 'scale' must be a string");
    }
    scale = file["scale"].get<std::string>();
  }
  if (overrides.scale) scale = *overrides.scale;
  if (scale.empty()) scale = "paper";
  if (scale != "desk" && scale != "paper") {
    throw ConfigError("config: key 'scale' must be 'desk' or 'paper'");
  }

  // A bare number is accepted for 'boycott' as shorthand for a one-point sweep.
  if (file.contains("boycott") && file["boycott"].is_number()) {
    file["boycott"] = json::array({file["boycott"].get<double>()});
  }

  json merged = detail::default_config(scenario);
  detail::reject_unknown_keys(file, merged, "");
  if (scale == "desk") detail::deep_merge(merged, detail::desk_overlay(scenario));
  merged["scale"] = scale;
  detail::deep_merge(merged, file);
  merged["scenario"] = scenario;  // subcommand wins, checked consistent above
  merged["scale"] = scale;
  if (overrides.seed) merged["seed"] = *overrides.seed;
  if (overrides.out_dir) merged["out_dir"] = *overrides.out_dir;

  if (merged["seed"].is_null()) {
    throw ConfigError("config: missing key 'seed' (seeds are mandatory)");
  }
  if (!merged["seed"].is_number_integer() || merged["seed"].get<std::int64_t>() < 0) {
    throw ConfigError("config: key 'seed' must be a non-negative integer");
  }

  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.scale = scale;
  cfg.seed = merged["seed"].get<std::uint64_t>();
  cfg.out_dir = detail::get_string(merged, "out_dir", "");
  cfg.grid_width = detail::get_int(merged["grid"], "width", "grid");
  cfg.grid_height = detail::get_int(merged["grid"], "height", "grid");
  cfg.agents = detail::get_int(merged, "agents", "");
  cfg.trees = detail::get_int(merged, "trees", "");
  cfg.episode_length = detail::get_int(merged, "episode_length", "");
  cfg.training_episodes = detail::get_int(merged, "training_episodes", "");
  cfg.eval_episodes = detail::get_int(merged, "eval_episodes", "");
  cfg.compliance_fraction = detail::get_double(merged, "compliance_fraction", "");
  cfg.boycott = detail::get_double_list(merged, "boycott", "");
  cfg.regulation.quota = detail::get_double(merged["regulation"], "quota", "regulation");
  cfg.regulation.tau = detail::get_double(merged["regulation"], "tau", "regulation");
  cfg.regulation.window = detail::get_int(merged["regulation"], "window", "regulation");
  cfg.learner.alpha = detail::get_double(merged["learner"], "alpha", "learner");
  cfg.learner.gamma = detail::get_double(merged["learner"], "gamma", "learner");
  cfg.learner.batch_size = detail::get_int(merged["learner"], "batch_size", "learner");
  cfg.learner.replay_capacity =
      detail::get_int(merged["learner"], "replay_capacity", "learner");
  cfg.learner.epsilon_start =
      detail::get_double(merged["learner"], "epsilon_start", "learner");
  cfg.learner.epsilon_end =
      detail::get_double(merged["learner"], "epsilon_end", "learner");
  cfg.learner.epsilon_fraction =
      detail::get_double(merged["learner"], "epsilon_fraction", "learner");
  cfg.capabilities.compliant =
      detail::get_int_list(merged["capabilities"], "compliant", "capabilities");
  cfg.capabilities.defective =
      detail::get_int_list(merged["capabilities"], "defective", "capabilities");
  cfg.capabilities.weak =
      detail::get_int_list(merged["capabilities"], "weak", "capabilities");
  cfg.capabilities.strong =
      detail::get_int_list(merged["capabilities"], "strong", "capabilities");
  cfg.detector.kind = detail::get_string(merged["detector"], "kind", "detector");
  cfg.detector.sequence_length =
      detail::get_int(merged["detector"], "sequence_length", "detector");
  cfg.detector.epochs = detail::get_int(merged["detector"], "epochs", "detector");
  cfg.detector.batch_size = detail::get_int(merged["detector"], "batch_size", "detector");
  cfg.detector.learning_rate =
      detail::get_double(merged["detector"], "learning_rate", "detector");
  cfg.detector.momentum = detail::get_double(merged["detector"], "momentum", "detector");
  cfg.detector.corpus = detail::get_string(merged["detector"], "corpus", "detector");
  cfg.detector.traces_per_class =
      detail::get_int(merged["detector"], "traces_per_class", "detector");
  cfg.detector.trace_length =
      detail::get_int(merged["detector"], "trace_length", "detector");
  cfg.detector.test_fraction =
      detail::get_double(merged["detector"], "test_fraction", "detector");
  cfg.detector.max_windows_per_trace =
      detail::get_int(merged["detector"], "max_windows_per_trace", "detector");
  cfg.egta.replicates = detail::get_int(merged["egta"], "replicates", "egta");
  cfg.egta.before_b = detail::get_double(merged["egta"], "before_b", "egta");
  cfg.egta.after_b = detail::get_double(merged["egta"], "after_b", "egta");
  cfg.egta.payoff_fixture =
      detail::get_string(merged["egta"], "payoff_fixture", "egta");
  cfg.detector_sweep.lengths =
      detail::get_int_list(merged["detector_sweep"], "lengths", "detector_sweep");

  // Constraint checks, each naming its key.
  const auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError("config: key '" + key + "' " + what);
  };
  if (cfg.grid_width < 3 || cfg.grid_height < 3) fail("grid", "must be at least 3x3");
  if (cfg.agents < 1) fail("agents", "must be >= 1");
  if (cfg.trees < 1) fail("trees", "must be >= 1");
  if (cfg.episode_length < 1) fail("episode_length", "must be >= 1");
  if (cfg.training_episodes < 1) fail("training_episodes", "must be >= 1");
  if (cfg.eval_episodes < 1) fail("eval_episodes", "must be >= 1");
  if (cfg.compliance_fraction < 0.0 || cfg.compliance_fraction > 1.0) {
    fail("compliance_fraction", "must be in [0, 1]");
  }
  for (std::size_t i = 0; i < cfg.boycott.size(); ++i) {
    if (cfg.boycott[i] < 0.0) fail("boycott", "must hold values >= 0");
    for (std::size_t k = 0; k < i; ++k) {
      if (cfg.boycott[k] == cfg.boycott[i]) fail("boycott", "must hold distinct values");
    }
  }
  if (cfg.regulation.quota <= 0.0) fail("regulation.quota", "must be > 0");
  if (cfg.regulation.window < 1) fail("regulation.window", "must be >= 1");
  if (cfg.learner.alpha < 0.0) fail("learner.alpha", "must be >= 0");
  if (cfg.learner.gamma < 0.0 || cfg.learner.gamma > 1.0) {
    fail("learner.gamma", "must be in [0, 1]");
  }
  if (cfg.learner.batch_size < 1) fail("learner.batch_size", "must be >= 1");
  if (cfg.learner.replay_capacity < cfg.learner.batch_size) {
    fail("learner.replay_capacity", "must be >= learner.batch_size");
  }
  for (double e : {cfg.learner.epsilon_start, cfg.learner.epsilon_end}) {
    if (e < 0.0 || e > 1.0) fail("learner.epsilon_start/end", "must be in [0, 1]");
  }
  if (cfg.learner.epsilon_fraction <= 0.0 || cfg.learner.epsilon_fraction > 1.0) {
    fail("learner.epsilon_fraction", "must be in (0, 1]");
  }
  for (const auto* caps :
       {&cfg.capabilities.compliant, &cfg.capabilities.defective,
        &cfg.capabilities.weak, &cfg.capabilities.strong}) {
    for (int c : *caps) {
      if (c < 0) fail("capabilities", "must hold values >= 0");
    }
  }
  if (cfg.detector.kind != "none" && cfg.detector.kind != "quota" &&
      cfg.detector.kind != "learned") {
    fail("detector.kind", "must be one of none, quota, learned");
  }
  if (cfg.detector.sequence_length < 1) fail("detector.sequence_length", "must be >= 1");
  if (cfg.detector.epochs < 1) fail("detector.epochs", "must be >= 1");
  if (cfg.detector.batch_size < 1) fail("detector.batch_size", "must be >= 1");
  if (cfg.detector.learning_rate <= 0.0) fail("detector.learning_rate", "must be > 0");
  if (cfg.detector.momentum < 0.0 || cfg.detector.momentum >= 1.0) {
    fail("detector.momentum", "must be in [0, 1)");
  }
  if (cfg.detector.corpus != "quota" && cfg.detector.corpus != "cadence" &&
      cfg.detector.corpus != "simulated") {
    fail("detector.corpus", "must be one of quota, cadence, simulated");
  }
  if (cfg.detector.traces_per_class < 1) fail("detector.traces_per_class", "must be >= 1");
  if (cfg.detector.trace_length < 1) fail("detector.trace_length", "must be >= 1");
  if (cfg.detector.test_fraction <= 0.0 || cfg.detector.test_fraction >= 1.0) {
    fail("detector.test_fraction", "must be in (0, 1)");
  }
  if (cfg.detector.max_windows_per_trace < 0) {
    fail("detector.max_windows_per_trace", "must be >= 0");
  }
  if (cfg.egta.replicates < 1) fail("egta.replicates", "must be >= 1");
  if (cfg.egta.before_b < 0.0 || cfg.egta.after_b < 0.0) {
    fail("egta.before_b/after_b", "must be >= 0");
  }
  if (cfg.detector_sweep.lengths.empty()) fail("detector_sweep.lengths", "must be non-empty");
  for (std::size_t i = 0; i < cfg.detector_sweep.lengths.size(); ++i) {
    if (cfg.detector_sweep.lengths[i] < 1) fail("detector_sweep.lengths", "must be >= 1");
    if (i > 0 && cfg.detector_sweep.lengths[i] <= cfg.detector_sweep.lengths[i - 1]) {
      fail("detector_sweep.lengths", "must be strictly ascending");
    }
  }
  if (cfg.scenario == "egta") {
    const int focal = cfg.agents - cfg.compliant_count();
    if (focal != 2) {
      fail("agents/compliance_fraction",
           "must leave exactly 2 focal (non-background) agents for egta");
    }
  }
  const int free_cells = cfg.grid_width * cfg.grid_height;
  if (cfg.agents + cfg.trees > free_cells) {
    fail("agents/trees", "exceed the number of grid cells");
  }

  cfg.effective = merged;
  json hashed = merged;
  hashed.erase("out_dir");  // relocating output must not change stamped hashes
  cfg.config_hash = detail::hex64(detail::fnv1a64(hashed.dump()));
  return cfg;
}

inline json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path,
                                    const ConfigOverrides& overrides = {}) {
  return resolve_config(parse_json_file(path), overrides);
}

}  // namespace normgrid
