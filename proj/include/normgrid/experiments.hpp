#pragma once
// Experiment runners. Each runner turns an ExperimentConfig into a RunReport:
// trained rosters, frozen-policy evaluation returns, per-series aggregates,
// payoff matrices for the strategy study, and detector sweep metrics.
//
// Seed discipline: every series, cell and counterfactual reuses the master
// seed, so paired comparisons see identical world layouts and differ only in
// roles, shaping and learning outcomes.

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "normgrid/config.hpp"
#include "normgrid/detector.hpp"
#include "normgrid/egta.hpp"
#include "normgrid/game.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/text.hpp"
#include "normgrid/trainer.hpp"

namespace normgrid {

struct SeriesResult {
  std::string name;
  double boycott_b = 0.0;
  bool counterfactual = false;
  std::vector<Role> roles;                  // per agent
  std::vector<std::string> class_labels;    // per agent, e.g. weak/strong
  std::vector<std::vector<double>> returns;  // [eval episode][agent]
  std::vector<double> mean_returns;          // per agent
  double avg_c = 0.0;
  std::optional<double> avg_d;
  std::optional<double> weak_mean;
  std::optional<double> strong_mean;
  std::vector<double> flag_rates;  // training episodes flagged, per agent
  std::vector<bool> final_verdicts;
};

struct EgtaReport {
  bool fixture = false;
  double before_b = 0.0;
  double after_b = 2.0;
  PayoffMatrix2x2 before;
  PayoffMatrix2x2 after;
  std::vector<CellEstimate> before_cells;  // empty in fixture mode
  std::vector<CellEstimate> after_cells;
  std::vector<EquilibriumClassification> before_nash;
  std::vector<EquilibriumClassification> after_nash;
  EnforcementResult before_enforcement;
  EnforcementResult after_enforcement;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<SeriesResult> series;
  std::optional<EgtaReport> egta;
  std::vector<LengthAccuracy> detector_rows;
  std::optional<TrainingReport> detector_training;
  double wall_seconds = 0.0;
  std::string timestamp;
};

inline TrainOptions train_options(const ExperimentConfig& cfg) {
  TrainOptions opts;
  opts.episodes = cfg.training_episodes;
  opts.alpha = cfg.learner.alpha;
  opts.gamma = cfg.learner.gamma;
  opts.batch_size = cfg.learner.batch_size;
  opts.replay_capacity = static_cast<std::size_t>(cfg.learner.replay_capacity);
  opts.epsilon = EpsilonSchedule::linear_decay(
      cfg.learner.epsilon_start, cfg.learner.epsilon_end,
      cfg.learner.epsilon_fraction * static_cast<double>(cfg.training_episodes));
  return opts;
}

struct BuiltDetector {
  DetectorSpec spec;
  std::optional<TrainingReport> training;
};

// Learned detectors are pretrained on a synthetic corpus before roster
// training starts; rule detectors need no preparation.
inline BuiltDetector build_detector(const ExperimentConfig& cfg) {
  BuiltDetector out;
  if (cfg.detector.kind == "none") {
    out.spec.kind = DetectorSpec::Kind::kNone;
    return out;
  }
  if (cfg.detector.kind == "quota") {
    out.spec.kind = DetectorSpec::Kind::kQuota;
    out.spec.quota = cfg.regulation.quota;
    return out;
  }
  if (cfg.detector.corpus == "simulated") {
    throw std::invalid_argument(
        "detector.corpus 'simulated' is only available in the detector scenario");
  }
  const CorpusKind kind =
      cfg.detector.corpus == "cadence" ? CorpusKind::kCadence : CorpusKind::kQuota;
  const auto corpus =
      synthetic_corpus(kind, cfg.detector.traces_per_class, cfg.detector.trace_length,
                       derive_seed(cfg.seed, kCorpusStream, 0));
  const LabeledDataset ds =
      build_dataset(corpus, cfg.detector.sequence_length, cfg.detector.test_fraction,
                    derive_seed(cfg.seed, kCorpusStream, 1),
                    cfg.detector.max_windows_per_trace);
  ClassifierTrainSpec ts;
  ts.epochs = cfg.detector.epochs;
  ts.batch_size = cfg.detector.batch_size;
  ts.learning_rate = cfg.detector.learning_rate;
  ts.momentum = cfg.detector.momentum;
  ts.seed = cfg.seed;
  auto [net, report] = train_classifier(ds, ts);
  out.spec.kind = DetectorSpec::Kind::kLearned;
  out.spec.sequence_length = cfg.detector.sequence_length;
  out.spec.classifier = std::make_shared<const SequenceClassifier>(std::move(net));
  out.training = report;
  return out;
}

namespace detail {

inline Capability make_capability(const std::vector<int>& cycle) {
  Capability c;
  c.cap_cycle = cycle;
  return c;
}

inline void fill_world_shape(const ExperimentConfig& cfg, ScenarioSpec& s) {
  s.width = cfg.grid_width;
  s.height = cfg.grid_height;
  s.tree_count = cfg.trees;
  s.episode_length = cfg.episode_length;
}

}  // namespace detail

// One defective high-id block against a compliant majority. Compliance is a
// capability limit at the collection quota; compliant agents carry the
// boycott stage, the defective block harvests raw.
inline ScenarioSpec exp1_scenario(const ExperimentConfig& cfg, double b,
                                  bool counterfactual,
                                  const DetectorSpec& detector) {
  ScenarioSpec s;
  detail::fill_world_shape(cfg, s);
  const int n = cfg.agents;
  const int compliant = counterfactual ? n : cfg.compliant_count();
  for (int i = 0; i < n; ++i) {
    AgentProfile p;
    p.agent_id = i;
    if (i < compliant) {
      p.role = Role::kCompliant;
      p.label = "compliant";
      p.capability = detail::make_capability(cfg.capabilities.compliant);
      p.shaping.boycott = true;
      p.shaping.boycott_b = b;
    } else {
      p.role = Role::kDefective;
      p.label = "defective";
      p.capability = detail::make_capability(cfg.capabilities.defective);
    }
    s.profiles.push_back(std::move(p));
  }
  s.detector = detector;
  return s;
}

// Weak compliant majority under the hard threshold regulation plus boycott;
// one strong agent. The strong agent defects by ignoring the regulation; in
// the counterfactual it keeps its strength but adopts the shaping.
inline ScenarioSpec exp2_scenario(const ExperimentConfig& cfg, double b,
                                  bool counterfactual,
                                  const DetectorSpec& detector) {
  ScenarioSpec s;
  detail::fill_world_shape(cfg, s);
  const int n = cfg.agents;
  const int compliant = cfg.compliant_count();
  for (int i = 0; i < n; ++i) {
    AgentProfile p;
    p.agent_id = i;
    const bool weak = i < compliant;
    p.label = weak ? "weak" : "strong";
    p.capability = detail::make_capability(weak ? cfg.capabilities.weak
                                                : cfg.capabilities.strong);
    if (weak || counterfactual) {
      p.role = Role::kCompliant;
      p.shaping.threshold = true;
      p.shaping.tau = cfg.regulation.tau;
      p.shaping.window = cfg.regulation.window;
      p.shaping.boycott = true;
      p.shaping.boycott_b = b;
    } else {
      p.role = Role::kDefective;
    }
    s.profiles.push_back(std::move(p));
  }
  s.detector = detector;
  return s;
}

// Two focal agents (ids 0 and 1) playing comply/defect against an
// all-compliant background. Strategy 0 = comply, 1 = defect.
inline ScenarioSpec egta_scenario(const ExperimentConfig& cfg, int s0, int s1,
                                  double b, const DetectorSpec& detector) {
  ScenarioSpec s;
  detail::fill_world_shape(cfg, s);
  const int n = cfg.agents;
  for (int i = 0; i < n; ++i) {
    AgentProfile p;
    p.agent_id = i;
    const bool focal = i < 2;
    const bool defect = focal && (i == 0 ? s0 : s1) == 1;
    if (defect) {
      p.role = Role::kDefective;
      p.label = "focal_d";
      p.capability = detail::make_capability(cfg.capabilities.defective);
    } else {
      p.role = Role::kCompliant;
      p.label = focal ? "focal_c" : "background";
      p.capability = detail::make_capability(cfg.capabilities.compliant);
      p.shaping.boycott = true;
      p.shaping.boycott_b = b;
    }
    s.profiles.push_back(std::move(p));
  }
  s.detector = detector;
  return s;
}

namespace detail {

inline SeriesResult run_series(const ExperimentConfig& cfg, const ScenarioSpec& scenario,
                               std::string name, double b, bool counterfactual) {
  const TrainedRoster roster = train_roster(scenario, train_options(cfg), cfg.seed);
  const EvalResult eval =
      evaluate_roster(scenario, roster, cfg.eval_episodes, cfg.seed);

  SeriesResult series;
  series.name = std::move(name);
  series.boycott_b = b;
  series.counterfactual = counterfactual;
  series.returns = eval.returns;
  series.mean_returns = eval.mean_returns;
  series.flag_rates = roster.flag_rates;
  series.final_verdicts = roster.final_verdicts;

  double c_sum = 0.0, d_sum = 0.0, w_sum = 0.0, s_sum = 0.0;
  int c_n = 0, d_n = 0, w_n = 0, s_n = 0;
  for (std::size_t i = 0; i < scenario.profiles.size(); ++i) {
    const AgentProfile& p = scenario.profiles[i];
    series.roles.push_back(p.role);
    series.class_labels.push_back(p.label.empty() ? role_name(p.role) : p.label);
    const double m = eval.mean_returns[i];
    if (p.role == Role::kCompliant) {
      c_sum += m;
      ++c_n;
    } else {
      d_sum += m;
      ++d_n;
    }
    if (series.class_labels.back() == "weak") {
      w_sum += m;
      ++w_n;
    } else if (series.class_labels.back() == "strong") {
      s_sum += m;
      ++s_n;
    }
  }
  series.avg_c = c_n > 0 ? c_sum / c_n : 0.0;
  if (d_n > 0) series.avg_d = d_sum / d_n;
  if (w_n > 0) series.weak_mean = w_sum / w_n;
  if (s_n > 0) series.strong_mean = s_sum / s_n;
  return series;
}

inline std::string series_name(double b) { return "b_" + format_double(b); }

template <typename ScenarioBuilder>
inline void run_sweep(const ExperimentConfig& cfg, const ScenarioBuilder& build,
                      RunReport& report) {
  // Counterfactual first, mirroring the all-compliant table rows; enforcement
  // is inert there, so it runs once at b=0.
  report.series.push_back(
      run_series(cfg, build(0.0, true), "all_compliant", 0.0, true));
  for (double b : cfg.boycott) {
    report.series.push_back(run_series(cfg, build(b, false), series_name(b), b, false));
  }
}

}  // namespace detail

inline RunReport run_experiment1(const ExperimentConfig& cfg) {
  if (cfg.scenario != "exp1") throw std::invalid_argument("run_experiment1: wrong scenario");
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config = cfg;
  const BuiltDetector detector = build_detector(cfg);
  report.detector_training = detector.training;
  detail::run_sweep(
      cfg,
      [&](double b, bool cf) { return exp1_scenario(cfg, b, cf, detector.spec); },
      report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.timestamp = utc_timestamp();
  return report;
}

inline RunReport run_experiment2(const ExperimentConfig& cfg) {
  if (cfg.scenario != "exp2") throw std::invalid_argument("run_experiment2: wrong scenario");
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config = cfg;
  const BuiltDetector detector = build_detector(cfg);
  report.detector_training = detector.training;
  detail::run_sweep(
      cfg,
      [&](double b, bool cf) { return exp2_scenario(cfg, b, cf, detector.spec); },
      report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.timestamp = utc_timestamp();
  return report;
}

inline json payoff_matrix_to_json(const PayoffMatrix2x2& m) {
  json j;
  j["labels"] = {m.labels[0], m.labels[1]};
  j["cells"] = json::array();
  for (int r = 0; r < 2; ++r) {
    json row = json::array();
    for (int c = 0; c < 2; ++c) {
      row.push_back({m.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)][0],
                     m.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)][1]});
    }
    j["cells"].push_back(row);
  }
  return j;
}

inline PayoffMatrix2x2 payoff_matrix_from_json(const json& j) {
  PayoffMatrix2x2 m;
  if (!j.is_object() || !j.contains("labels") || !j.contains("cells")) {
    throw ConfigError("payoff matrix: need 'labels' and 'cells'");
  }
  const json& labels = j["labels"];
  if (!labels.is_array() || labels.size() != 2 || !labels[0].is_string() ||
      !labels[1].is_string()) {
    throw ConfigError("payoff matrix: 'labels' must be two strings");
  }
  m.labels = {labels[0].get<std::string>(), labels[1].get<std::string>()};
  const json& cells = j["cells"];
  if (!cells.is_array() || cells.size() != 2) {
    throw ConfigError("payoff matrix: 'cells' must be a 2x2 table");
  }
  for (std::size_t r = 0; r < 2; ++r) {
    if (!cells[r].is_array() || cells[r].size() != 2) {
      throw ConfigError("payoff matrix: 'cells' must be a 2x2 table");
    }
    for (std::size_t c = 0; c < 2; ++c) {
      const json& pair = cells[r][c];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        throw ConfigError("payoff matrix: each cell must hold two numbers");
      }
      m.cells[r][c] = {pair[0].get<double>(), pair[1].get<double>()};
    }
  }
  return m;
}

inline RunReport run_egta(const ExperimentConfig& cfg) {
  if (cfg.scenario != "egta") throw std::invalid_argument("run_egta: wrong scenario");
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config = cfg;
  EgtaReport out;
  out.before_b = cfg.egta.before_b;
  out.after_b = cfg.egta.after_b;

  if (!cfg.egta.payoff_fixture.empty()) {
    const json fixture = parse_json_file(cfg.egta.payoff_fixture);
    if (!fixture.contains("before") || !fixture.contains("after")) {
      throw ConfigError("payoff fixture: need 'before' and 'after' matrices");
    }
    out.fixture = true;
    out.before = payoff_matrix_from_json(fixture["before"]);
    out.after = payoff_matrix_from_json(fixture["after"]);
  } else {
    const BuiltDetector detector = build_detector(cfg);
    report.detector_training = detector.training;
    EgtaPlan plan;
    plan.train = train_options(cfg);
    plan.eval_episodes = cfg.eval_episodes;
    plan.replicates = cfg.egta.replicates;
    plan.seed = cfg.seed;

    plan.cell_scenario = [&](int s0, int s1) {
      return egta_scenario(cfg, s0, s1, cfg.egta.before_b, detector.spec);
    };
    EgtaResult before = fill_empirical_matrix(plan);
    plan.cell_scenario = [&](int s0, int s1) {
      return egta_scenario(cfg, s0, s1, cfg.egta.after_b, detector.spec);
    };
    EgtaResult after = fill_empirical_matrix(plan);
    out.before = before.matrix;
    out.after = after.matrix;
    out.before_cells = std::move(before.cells);
    out.after_cells = std::move(after.cells);
  }

  out.before_nash = pure_nash_set(out.before.to_game());
  out.after_nash = pure_nash_set(out.after.to_game());
  out.before_enforcement = enforcement_holds(out.before);
  out.after_enforcement = enforcement_holds(out.after);
  report.egta = std::move(out);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.timestamp = utc_timestamp();
  return report;
}

// Labeled reward traces from a trained roster: greedy rollouts of an
// exp2-style world without any detector, labels taken from the roles.
inline std::vector<std::pair<BehaviorTrace, int>> simulated_corpus(
    const ExperimentConfig& cfg) {
  const ScenarioSpec scenario = exp2_scenario(cfg, 0.0, false, DetectorSpec{});
  const TrainedRoster roster = train_roster(scenario, train_options(cfg), cfg.seed);
  const int n = scenario.agent_count();

  Rng dummy(0);
  std::vector<PolicyFn> policies;
  for (int i = 0; i < n; ++i) {
    const ValueApproximator* approx = roster.values[static_cast<std::size_t>(i)].get();
    policies.push_back([approx, &dummy](const Observation& o) {
      return select_action(*approx, o, 0.0, dummy);
    });
  }

  std::vector<std::pair<BehaviorTrace, int>> corpus;
  const WorldConfig world_cfg = scenario.world_config();
  for (int e = 0; e < cfg.eval_episodes; ++e) {
    GridWorld world(world_cfg,
                    derive_seed(cfg.seed, kEvalStream, static_cast<std::uint64_t>(e)));
    EpisodeResult episode = run_episode(world, policies);
    for (int i = 0; i < n; ++i) {
      const int label =
          scenario.profiles[static_cast<std::size_t>(i)].role == Role::kDefective ? 1 : 0;
      corpus.emplace_back(std::move(episode.traces[static_cast<std::size_t>(i)]), label);
    }
  }
  return corpus;
}

inline RunReport run_detector_sweep(const ExperimentConfig& cfg) {
  if (cfg.scenario != "detector") {
    throw std::invalid_argument("run_detector_sweep: wrong scenario");
  }
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config = cfg;

  std::vector<std::pair<BehaviorTrace, int>> corpus;
  if (cfg.detector.corpus == "simulated") {
    corpus = simulated_corpus(cfg);
  } else {
    const CorpusKind kind =
        cfg.detector.corpus == "cadence" ? CorpusKind::kCadence : CorpusKind::kQuota;
    corpus = synthetic_corpus(kind, cfg.detector.traces_per_class,
                              cfg.detector.trace_length,
                              derive_seed(cfg.seed, kCorpusStream, 0));
  }

  ClassifierTrainSpec ts;
  ts.epochs = cfg.detector.epochs;
  ts.batch_size = cfg.detector.batch_size;
  ts.learning_rate = cfg.detector.learning_rate;
  ts.momentum = cfg.detector.momentum;
  ts.seed = cfg.seed;
  report.detector_rows =
      length_sweep(corpus, cfg.detector_sweep.lengths, ts, cfg.detector.test_fraction,
                   cfg.detector.max_windows_per_trace);

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.timestamp = utc_timestamp();
  return report;
}

inline RunReport run_scenario(const ExperimentConfig& cfg) {
  if (cfg.scenario == "exp1") return run_experiment1(cfg);
  if (cfg.scenario == "exp2") return run_experiment2(cfg);
  if (cfg.scenario == "egta") return run_egta(cfg);
  if (cfg.scenario == "detector") return run_detector_sweep(cfg);
  throw std::invalid_argument("run_scenario: unknown scenario '" + cfg.scenario + "'");
}

}  // namespace normgrid
