#pragma once
// Reward shaping operators. All of them are pure value transforms: they take
// this step's raw reward plus context (recent own harvest, who is currently
// flagged, what everyone just collected) and emit the reward the learner
// trains on. Environment state is never touched.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace normgrid {

// Ring of the last `window` raw rewards; sum() is the rolling intake used by
// the diminishing operators. Push order: shape first with the previous
// window, then push the new raw reward.
class RewardHistory {
 public:
  explicit RewardHistory(int window) : ring_(check_window(window), 0.0) {}

  int window() const { return static_cast<int>(ring_.size()); }

  void push(double raw) {
    ring_[next_] = raw;
    next_ = (next_ + 1) % ring_.size();
    if (count_ < ring_.size()) ++count_;
  }

  // Oldest-to-newest summation order, so reruns reproduce bit-identical sums.
  double sum() const {
    double total = 0.0;
    for (std::size_t k = 0; k < count_; ++k) {
      total += ring_[(next_ + ring_.size() - count_ + k) % ring_.size()];
    }
    return total;
  }

  void reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    next_ = 0;
    count_ = 0;
  }

 private:
  static std::size_t check_window(int window) {
    if (window < 1) throw std::invalid_argument("RewardHistory: window must be >= 1");
    return static_cast<std::size_t>(window);
  }

  std::vector<double> ring_;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
};

struct DiminishConfig {
  int window = 3;
  std::function<double(double)> f;  // multiplier as a function of recent intake
  std::string f_name;               // for config echo / serialization
};

// Named multiplier functions available to config files.
inline std::function<double(double)> diminish_function(const std::string& name,
                                                       double param = 1.0) {
  if (name == "inverse") {
    return [param](double intake) { return 1.0 / (1.0 + param * intake); };
  }
  if (name == "exp") {
    return [param](double intake) { return std::exp(-param * intake); };
  }
  if (name == "constant") {
    return [](double) { return 1.0; };
  }
  throw std::invalid_argument("unknown diminish function: " + name);
}

// The multiplier has to discourage, never encourage, recent over-harvesting.
// Checked by sampling the function on a coarse intake grid.
inline void validate_diminish(const DiminishConfig& config) {
  if (config.window < 1) {
    throw std::invalid_argument("diminish: window must be >= 1");
  }
  if (!config.f) throw std::invalid_argument("diminish: missing multiplier");
  double prev = config.f(0.0);
  for (int i = 1; i <= 40; ++i) {
    const double cur = config.f(i * 0.5);
    if (cur > prev + 1e-12) {
      throw std::invalid_argument("diminish: multiplier must be non-increasing");
    }
    prev = cur;
  }
}

inline double diminish(double raw, const RewardHistory& history,
                       const DiminishConfig& config) {
  if (!config.f) throw std::invalid_argument("diminish: missing multiplier");
  if (history.window() != config.window) {
    throw std::invalid_argument("diminish: history window mismatch");
  }
  return raw * config.f(history.sum());
}

// Hard regulation: keep the reward while recent intake stays within tau,
// otherwise replace it with a flat -1 penalty.
inline double threshold_diminish(double raw, double window_sum, double tau) {
  return window_sum <= tau ? raw : -1.0;
}

// Subtract b times the mean reward just observed from flagged agents. With
// nobody flagged the raw reward passes through untouched.
inline double boycott_shape(double raw, const std::vector<bool>& verdicts,
                            const std::vector<double>& observed_rewards,
                            double b) {
  if (verdicts.size() != observed_rewards.size()) {
    throw std::invalid_argument("boycott_shape: verdicts/rewards size mismatch");
  }
  if (b < 0.0) throw std::invalid_argument("boycott_shape: b must be >= 0");
  double flagged_sum = 0.0;
  std::size_t flagged_count = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i]) {
      flagged_sum += observed_rewards[i];
      ++flagged_count;
    }
  }
  if (flagged_count == 0) return raw;
  return raw - b * (flagged_sum / static_cast<double>(flagged_count));
}

// Context handed to every stage of a shaping pipeline for one (agent, step).
struct ShapingContext {
  double window_sum = 0.0;  // rolling raw-reward intake before this step
  const std::vector<bool>* verdicts = nullptr;
  const std::vector<double>* observed_rewards = nullptr;
};

using ShapingStage = std::function<double(double, const ShapingContext&)>;

inline ShapingStage diminish_stage(DiminishConfig config) {
  validate_diminish(config);
  return [config](double raw, const ShapingContext& ctx) {
    return raw * config.f(ctx.window_sum);
  };
}

inline ShapingStage threshold_stage(double tau) {
  return [tau](double raw, const ShapingContext& ctx) {
    return threshold_diminish(raw, ctx.window_sum, tau);
  };
}

inline ShapingStage boycott_stage(double b) {
  if (b < 0.0) throw std::invalid_argument("boycott_stage: b must be >= 0");
  return [b](double raw, const ShapingContext& ctx) {
    if (ctx.verdicts == nullptr || ctx.observed_rewards == nullptr) {
      throw std::logic_error("boycott stage needs verdicts and observed rewards");
    }
    return boycott_shape(raw, *ctx.verdicts, *ctx.observed_rewards, b);
  };
}

// Left-to-right composition; each stage consumes the previous stage's output
// as its raw input. An empty pipeline is the identity.
inline ShapingStage compose_pipeline(std::vector<ShapingStage> stages) {
  for (const auto& s : stages) {
    if (!s) throw std::invalid_argument("compose_pipeline: empty stage");
  }
  return [stages = std::move(stages)](double raw, const ShapingContext& ctx) {
    double value = raw;
    for (const auto& stage : stages) value = stage(value, ctx);
    return value;
  };
}

}  // namespace normgrid
