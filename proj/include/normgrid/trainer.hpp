#pragma once
// Roster training and frozen evaluation. Every agent owns its learner state
// (approximator, replay buffer, exploration rng); coupling between agents
// happens only through the shared world, the global verdict vector and the
// boycott term of the shaped reward.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "normgrid/detector.hpp"
#include "normgrid/features.hpp"
#include "normgrid/learner.hpp"
#include "normgrid/shaping.hpp"
#include "normgrid/world.hpp"

namespace normgrid {

enum class Role { kCompliant, kDefective };

inline const char* role_name(Role r) {
  return r == Role::kCompliant ? "compliant" : "defective";
}

// Declarative per-agent shaping: an optional hard threshold regulation
// followed by an optional boycott stage.
struct ShapingSpec {
  bool threshold = false;
  double tau = 2.0;
  int window = 3;
  bool boycott = false;
  double boycott_b = 0.0;

  bool any() const { return threshold || boycott; }
};

struct AgentProfile {
  int agent_id = 0;
  Capability capability;
  Role role = Role::kCompliant;
  ShapingSpec shaping;
  // Reporting label ("compliant", "defective", "weak", "strong", ...); falls
  // back to the role name when empty.
  std::string label;
};

struct DetectorSpec {
  enum class Kind { kNone, kQuota, kLearned };
  Kind kind = Kind::kNone;
  double quota = 3.0;
  int sequence_length = 20;
  std::shared_ptr<const SequenceClassifier> classifier;
};

struct ScenarioSpec {
  int width = 20;
  int height = 20;
  int tree_count = 15;
  int episode_length = 1000;
  std::vector<Cell> walls;
  std::vector<AgentProfile> profiles;
  DetectorSpec detector;

  int agent_count() const { return static_cast<int>(profiles.size()); }

  WorldConfig world_config() const {
    WorldConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.tree_count = tree_count;
    cfg.episode_length = episode_length;
    cfg.walls = walls;
    for (const auto& p : profiles) cfg.capabilities.push_back(p.capability);
    return cfg;
  }

  void validate() const {
    if (profiles.empty()) throw std::invalid_argument("scenario: no agents");
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (profiles[i].agent_id != static_cast<int>(i)) {
        throw std::invalid_argument("scenario: profiles must be id-ordered");
      }
      if (profiles[i].shaping.boycott && profiles[i].shaping.boycott_b < 0.0) {
        throw std::invalid_argument("scenario: boycott ratio must be >= 0");
      }
    }
    if (detector.kind == DetectorSpec::Kind::kLearned) {
      if (!detector.classifier) {
        throw std::invalid_argument("scenario: learned detector needs a classifier");
      }
      if (detector.classifier->input_length() != detector.sequence_length) {
        throw std::invalid_argument("scenario: classifier length mismatch");
      }
    }
  }
};

struct TrainOptions {
  int episodes = 2000;
  double alpha = 0.1;
  double gamma = 0.95;
  int batch_size = 32;
  std::size_t replay_capacity = 5000;
  // Default: linear decay 1.0 -> 0.05 over the first 60% of episodes.
  std::optional<EpsilonSchedule> epsilon;
  FeatureLayout features;  // flagged-offset block auto-enabled for boycotters
};

struct TrainedRoster {
  std::vector<std::shared_ptr<GridFeaturizer>> featurizers;
  std::vector<std::unique_ptr<ValueApproximator>> values;
  std::vector<bool> final_verdicts;
  std::vector<double> final_confidences;
  std::vector<double> flag_rates;  // fraction of training episodes flagged
  // Mean raw return per episode by role, for diagnostics.
  std::vector<double> compliant_curve;
  std::vector<double> defective_curve;
};

namespace detail {

inline ShapingStage build_pipeline(const ShapingSpec& spec) {
  std::vector<ShapingStage> stages;
  if (spec.threshold) stages.push_back(threshold_stage(spec.tau));
  if (spec.boycott) stages.push_back(boycott_stage(spec.boycott_b));
  return compose_pipeline(std::move(stages));
}

inline std::vector<double> trace_tail(const BehaviorTrace& trace, int length) {
  std::vector<double> out;
  const std::size_t n = trace.steps.size();
  if (static_cast<int>(n) < length) return out;
  out.reserve(static_cast<std::size_t>(length));
  for (std::size_t i = n - static_cast<std::size_t>(length); i < n; ++i) {
    out.push_back(trace.steps[i].raw_reward);
  }
  return out;
}

}  // namespace detail

// Independent one-step TD learners with epsilon-greedy exploration and FIFO
// replay. Detector verdicts refresh at episode boundaries from that
// episode's traces and feed both the boycott stage and the flagged-offset
// feature block of every boycotting agent.
inline TrainedRoster train_roster(const ScenarioSpec& scenario,
                                  const TrainOptions& opts, std::uint64_t seed) {
  scenario.validate();
  if (opts.episodes < 1) throw std::invalid_argument("train: episodes must be >= 1");
  if (opts.batch_size < 1) throw std::invalid_argument("train: batch must be >= 1");

  const int n = scenario.agent_count();
  const WorldConfig world_cfg = scenario.world_config();
  const EpsilonSchedule schedule =
      opts.epsilon.value_or(EpsilonSchedule::linear_decay(
          1.0, 0.05, 0.6 * static_cast<double>(opts.episodes)));

  TrainedRoster roster;
  std::vector<ReplayBuffer> buffers;
  std::vector<Rng> rngs;
  std::vector<ShapingStage> pipelines;
  std::vector<std::unique_ptr<RewardHistory>> histories;
  for (int i = 0; i < n; ++i) {
    const AgentProfile& profile = scenario.profiles[static_cast<std::size_t>(i)];
    FeatureLayout layout = opts.features;
    layout.flagged_offset = profile.shaping.boycott;
    roster.featurizers.push_back(std::make_shared<GridFeaturizer>(layout));
    roster.values.push_back(
        std::make_unique<LinearApproximator>(roster.featurizers.back()));
    buffers.emplace_back(opts.replay_capacity);
    rngs.emplace_back(derive_seed(seed, kAgentStream, static_cast<std::uint64_t>(i)));
    pipelines.push_back(profile.shaping.any() ? detail::build_pipeline(profile.shaping)
                                              : ShapingStage{});
    histories.push_back(profile.shaping.threshold
                            ? std::make_unique<RewardHistory>(profile.shaping.window)
                            : nullptr);
  }

  std::vector<bool> verdicts(static_cast<std::size_t>(n), false);
  std::vector<double> confidences(static_cast<std::size_t>(n), 0.0);
  std::vector<int> flag_count(static_cast<std::size_t>(n), 0);

  std::vector<Observation> obs(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> feats(static_cast<std::size_t>(n));
  std::vector<int> actions(static_cast<std::size_t>(n), 0);
  std::vector<double> shaped(static_cast<std::size_t>(n), 0.0);
  std::vector<BehaviorTrace> traces(static_cast<std::size_t>(n));

  for (int episode = 0; episode < opts.episodes; ++episode) {
    const double eps = schedule.at(static_cast<double>(episode));
    GridWorld world(world_cfg,
                    derive_seed(seed, kWorldStream, static_cast<std::uint64_t>(episode)));
    for (int i = 0; i < n; ++i) {
      auto& trace = traces[static_cast<std::size_t>(i)];
      trace.agent_id = i;
      trace.steps.clear();
      trace.steps.reserve(static_cast<std::size_t>(world.episode_length()));
      if (histories[static_cast<std::size_t>(i)]) {
        histories[static_cast<std::size_t>(i)]->reset();
      }
      obs[static_cast<std::size_t>(i)] = observe(world, i);
      roster.featurizers[static_cast<std::size_t>(i)]->extract(
          obs[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(i)]);
    }

    while (!world.done()) {
      const int t = world.step_index();
      for (int i = 0; i < n; ++i) {
        actions[static_cast<std::size_t>(i)] = select_action(
            *roster.values[static_cast<std::size_t>(i)], obs[static_cast<std::size_t>(i)],
            eps, rngs[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(i)]);
      }
      const std::vector<double> raw = world.step(actions);

      for (int i = 0; i < n; ++i) {
        ShapingContext ctx;
        ctx.window_sum = histories[static_cast<std::size_t>(i)]
                             ? histories[static_cast<std::size_t>(i)]->sum()
                             : 0.0;
        ctx.verdicts = &verdicts;
        ctx.observed_rewards = &raw;
        shaped[static_cast<std::size_t>(i)] =
            pipelines[static_cast<std::size_t>(i)]
                ? pipelines[static_cast<std::size_t>(i)](raw[static_cast<std::size_t>(i)], ctx)
                : raw[static_cast<std::size_t>(i)];
        if (histories[static_cast<std::size_t>(i)]) {
          histories[static_cast<std::size_t>(i)]->push(raw[static_cast<std::size_t>(i)]);
        }
      }

      const bool terminal = world.done();
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        Observation next = observe(world, i);
        std::vector<int> next_feats;
        roster.featurizers[idx]->extract(next, next_feats);

        Transition tr;
        tr.obs = std::move(obs[idx]);
        tr.action = actions[idx];
        tr.reward = shaped[idx];
        tr.next = next;
        tr.terminal = terminal;
        tr.obs_features = std::move(feats[idx]);
        tr.next_features = next_feats;
        buffers[idx].push(std::move(tr));

        if (buffers[idx].size() >= static_cast<std::size_t>(opts.batch_size)) {
          const auto batch = buffers[idx].sample(
              static_cast<std::size_t>(opts.batch_size), rngs[idx]);
          td_update(*roster.values[idx], batch, opts.alpha, opts.gamma);
        }

        traces[idx].steps.push_back(TraceStep{t, actions[idx], raw[idx]});
        obs[idx] = std::move(next);
        feats[idx] = std::move(next_feats);
      }
    }

    // Episode boundary: refresh verdicts from this episode's traces.
    if (scenario.detector.kind == DetectorSpec::Kind::kQuota) {
      for (int i = 0; i < n; ++i) {
        const Verdict v =
            quota_detect(traces[static_cast<std::size_t>(i)], scenario.detector.quota);
        verdicts[static_cast<std::size_t>(i)] = v.flagged;
        confidences[static_cast<std::size_t>(i)] = v.confidence;
      }
    } else if (scenario.detector.kind == DetectorSpec::Kind::kLearned) {
      for (int i = 0; i < n; ++i) {
        const std::vector<double> tail = detail::trace_tail(
            traces[static_cast<std::size_t>(i)], scenario.detector.sequence_length);
        if (tail.empty()) {
          verdicts[static_cast<std::size_t>(i)] = false;
          confidences[static_cast<std::size_t>(i)] = 0.0;
        } else {
          const Verdict v = classify(*scenario.detector.classifier, tail, i);
          verdicts[static_cast<std::size_t>(i)] = v.flagged;
          confidences[static_cast<std::size_t>(i)] = v.confidence;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (verdicts[static_cast<std::size_t>(i)]) ++flag_count[static_cast<std::size_t>(i)];
      roster.featurizers[static_cast<std::size_t>(i)]->set_verdicts(verdicts);
    }

    double c_sum = 0.0, d_sum = 0.0;
    int c_n = 0, d_n = 0;
    for (int i = 0; i < n; ++i) {
      const double ret = world.agent(i).episode_return;
      if (scenario.profiles[static_cast<std::size_t>(i)].role == Role::kCompliant) {
        c_sum += ret;
        ++c_n;
      } else {
        d_sum += ret;
        ++d_n;
      }
    }
    roster.compliant_curve.push_back(c_n > 0 ? c_sum / c_n : 0.0);
    roster.defective_curve.push_back(d_n > 0 ? d_sum / d_n : 0.0);
  }

  roster.final_verdicts = verdicts;
  roster.final_confidences = confidences;
  for (int i = 0; i < n; ++i) {
    roster.flag_rates.push_back(static_cast<double>(flag_count[static_cast<std::size_t>(i)]) /
                                static_cast<double>(opts.episodes));
  }
  return roster;
}

struct EvalResult {
  // returns[episode][agent], discounted by gamma (gamma = 1 -> raw apples)
  std::vector<std::vector<double>> returns;
  std::vector<double> mean_returns;  // per agent, arithmetic mean over episodes
};

// Frozen greedy rollouts: no exploration, no learning, no shaping; verdict
// state stays at its end-of-training values (it is a policy input).
inline EvalResult evaluate_roster(const ScenarioSpec& scenario,
                                  const TrainedRoster& roster, int episodes,
                                  std::uint64_t seed, double gamma = 1.0) {
  scenario.validate();
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("evaluate: gamma must be in [0, 1]");
  }
  const int n = scenario.agent_count();
  if (static_cast<int>(roster.values.size()) != n) {
    throw std::invalid_argument("evaluate: roster/scenario size mismatch");
  }

  const WorldConfig world_cfg = scenario.world_config();
  EvalResult result;
  result.returns.reserve(static_cast<std::size_t>(episodes));
  result.mean_returns.assign(static_cast<std::size_t>(n), 0.0);

  Rng dummy(0);  // greedy selection consumes no randomness
  std::vector<PolicyFn> policies;
  policies.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ValueApproximator* approx = roster.values[static_cast<std::size_t>(i)].get();
    policies.push_back([approx, &dummy](const Observation& o) {
      return select_action(*approx, o, 0.0, dummy);
    });
  }

  for (int e = 0; e < episodes; ++e) {
    GridWorld world(world_cfg,
                    derive_seed(seed, kEvalStream, static_cast<std::uint64_t>(e)));
    std::vector<double> discounted(static_cast<std::size_t>(n), 0.0);
    double weight = 1.0;
    const StepHook hook = [&](const GridWorld&, const StepRecord& record) {
      for (int i = 0; i < n; ++i) {
        discounted[static_cast<std::size_t>(i)] +=
            weight * record.raw_rewards[static_cast<std::size_t>(i)];
      }
      weight *= gamma;
    };
    run_episode(world, policies, hook);
    for (int i = 0; i < n; ++i) {
      result.mean_returns[static_cast<std::size_t>(i)] +=
          discounted[static_cast<std::size_t>(i)];
    }
    result.returns.push_back(std::move(discounted));
  }
  for (double& m : result.mean_returns) m /= static_cast<double>(episodes);
  return result;
}

struct DiscountedReturnEstimate {
  std::vector<double> mean_returns;
  int episodes = 0;
  double gamma = 1.0;
};

inline DiscountedReturnEstimate estimate_return(const ScenarioSpec& scenario,
                                                const TrainedRoster& roster,
                                                int episodes, std::uint64_t seed,
                                                double gamma = 1.0) {
  const EvalResult eval = evaluate_roster(scenario, roster, episodes, seed, gamma);
  return DiscountedReturnEstimate{eval.mean_returns, episodes, gamma};
}

}  // namespace normgrid
