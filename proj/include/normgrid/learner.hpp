#pragma once
// Independent per-agent Q-learning pieces: transitions, a FIFO replay
// buffer, value approximators over observations, epsilon-greedy action
// selection and the one-step TD update.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "normgrid/actions.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/world.hpp"

namespace normgrid {

struct Transition {
  Observation obs;
  int action = 0;
  double reward = 0.0;  // shaped reward the learner trains on
  Observation next;
  bool terminal = false;
  // Optional sparse-feature caches filled by the experience collector so the
  // linear approximator does not re-extract features on every replay. Empty
  // means "derive on demand". Cached at collection time on purpose: the
  // features then reflect the verdict state the agent actually acted under.
  std::vector<int> obs_features;
  std::vector<int> next_features;
};

// Fixed-capacity ring; once full, each push evicts the oldest transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000) : capacity_(capacity) {
    if (capacity_ == 0) {
      throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }
    ring_.reserve(capacity_);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }

  void push(Transition t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i = 0 addresses the oldest stored transition.
  const Transition& item(std::size_t i) const {
    if (i >= ring_.size()) throw std::out_of_range("ReplayBuffer: bad index");
    return ring_[(head_ + i) % ring_.size()];
  }

  // Uniform with replacement.
  std::vector<const Transition*> sample(std::size_t k, Rng& rng) const {
    if (ring_.empty()) throw std::logic_error("ReplayBuffer: sample from empty");
    if (k == 0) throw std::invalid_argument("ReplayBuffer: sample size must be positive");
    std::vector<const Transition*> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      out.push_back(&ring_[static_cast<std::size_t>(rng.bounded(ring_.size()))]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  // oldest element once the ring is full
};

// Maps an observation to one value per action. adjust() must move the value
// of exactly (obs, action) by delta; the optional sparse-feature cache lets
// implementations skip their own extraction step.
class ValueApproximator {
 public:
  virtual ~ValueApproximator() = default;

  virtual std::vector<double> action_values(
      const Observation& obs, std::span<const int> feature_cache = {}) const = 0;

  virtual void adjust(const Observation& obs, std::span<const int> feature_cache,
                      int action, double delta) = 0;

  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<ValueApproximator> clone() const = 0;
};

// Exact lookup table keyed by the full observation contents. Unseen
// observations value every action at zero.
class TabularApproximator : public ValueApproximator {
 public:
  std::vector<double> action_values(const Observation& obs,
                                    std::span<const int> = {}) const override {
    const auto it = table_.find(key_of(obs));
    if (it == table_.end()) {
      return std::vector<double>(kActionCount, 0.0);
    }
    return it->second;
  }

  void adjust(const Observation& obs, std::span<const int>, int action,
              double delta) override {
    if (action < 0 || action >= kActionCount) {
      throw std::out_of_range("TabularApproximator: bad action");
    }
    auto [it, inserted] =
        table_.try_emplace(key_of(obs), std::vector<double>(kActionCount, 0.0));
    it->second[static_cast<std::size_t>(action)] += delta;
  }

  std::size_t state_count() const { return table_.size(); }

  nlohmann::json to_json() const override {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [key, values] : table_) {
      entries.push_back({{"key", key}, {"q", values}});
    }
    return {{"kind", "tabular"}, {"version", 1}, {"entries", entries}};
  }

  static std::unique_ptr<TabularApproximator> from_json(const nlohmann::json& j) {
    if (j.at("kind") != "tabular" || j.at("version") != 1) {
      throw std::invalid_argument("TabularApproximator: bad serialized form");
    }
    auto out = std::make_unique<TabularApproximator>();
    for (const auto& entry : j.at("entries")) {
      out->table_[entry.at("key").get<std::vector<double>>()] =
          entry.at("q").get<std::vector<double>>();
    }
    return out;
  }

  std::unique_ptr<ValueApproximator> clone() const override {
    return std::make_unique<TabularApproximator>(*this);
  }

 private:
  static std::vector<double> key_of(const Observation& obs) {
    std::vector<double> key;
    key.reserve(obs.spatial.size() + obs.nonspatial.size());
    key.insert(key.end(), obs.spatial.begin(), obs.spatial.end());
    key.insert(key.end(), obs.nonspatial.begin(), obs.nonspatial.end());
    return key;
  }

  std::map<std::vector<double>, std::vector<double>> table_;
};

// Epsilon-greedy over the approximator's values. Ties resolve to the lowest
// action index; the exploration draw is skipped entirely when epsilon <= 0
// so greedy evaluation consumes no randomness.
inline int select_action(const ValueApproximator& approx, const Observation& obs,
                         double epsilon, Rng& rng,
                         std::span<const int> feature_cache = {}) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("select_action: epsilon must be in [0, 1]");
  }
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.bounded(kActionCount));
  }
  const std::vector<double> values = approx.action_values(obs, feature_cache);
  int best = 0;
  for (int a = 1; a < kActionCount; ++a) {
    if (values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(best)]) {
      best = a;
    }
  }
  return best;
}

// One-step TD update applied transition by transition: move Q(s, a) toward
// r + gamma * max_a' Q(s', a'), with the target truncated to r on terminal
// transitions. Returns the mean squared TD error, each error measured just
// before its own update.
inline double td_update(ValueApproximator& approx,
                        std::span<const Transition* const> batch, double alpha,
                        double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
  if (alpha < 0.0) throw std::invalid_argument("td_update: alpha must be >= 0");
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("td_update: gamma must be in [0, 1]");
  }
  double squared_error = 0.0;
  for (const Transition* t : batch) {
    const std::vector<double> values = approx.action_values(t->obs, t->obs_features);
    double target = t->reward;
    if (!t->terminal) {
      const std::vector<double> next_values =
          approx.action_values(t->next, t->next_features);
      target += gamma * *std::max_element(next_values.begin(), next_values.end());
    }
    const double delta = target - values[static_cast<std::size_t>(t->action)];
    squared_error += delta * delta;
    approx.adjust(t->obs, t->obs_features, t->action, alpha * delta);
  }
  return squared_error / static_cast<double>(batch.size());
}

inline double td_update(ValueApproximator& approx, std::span<const Transition> batch,
                        double alpha, double gamma) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const Transition& t : batch) ptrs.push_back(&t);
  return td_update(approx, ptrs, alpha, gamma);
}

// Piecewise-linear exploration schedule over (x, epsilon) breakpoints,
// clamped to the first/last value outside the covered range.
class EpsilonSchedule {
 public:
  explicit EpsilonSchedule(std::vector<std::pair<double, double>> breakpoints)
      : points_(std::move(breakpoints)) {
    if (points_.empty()) {
      throw std::invalid_argument("EpsilonSchedule: need at least one breakpoint");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].second < 0.0 || points_[i].second > 1.0) {
        throw std::invalid_argument("EpsilonSchedule: epsilon must be in [0, 1]");
      }
      if (i > 0) {
        if (points_[i].first <= points_[i - 1].first) {
          throw std::invalid_argument("EpsilonSchedule: x must be strictly increasing");
        }
        if (points_[i].second > points_[i - 1].second) {
          throw std::invalid_argument("EpsilonSchedule: epsilon must be non-increasing");
        }
      }
    }
  }

  static EpsilonSchedule linear_decay(double from, double to, double over_x) {
    if (over_x <= 0.0) {
      return EpsilonSchedule({{0.0, to}});
    }
    return EpsilonSchedule({{0.0, from}, {over_x, to}});
  }

  double at(double x) const {
    if (x <= points_.front().first) return points_.front().second;
    if (x >= points_.back().first) return points_.back().second;
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (x <= points_[i].first) {
        const auto [x0, e0] = points_[i - 1];
        const auto [x1, e1] = points_[i];
        return e0 + (e1 - e0) * (x - x0) / (x1 - x0);
      }
    }
    return points_.back().second;
  }

  const std::vector<std::pair<double, double>>& breakpoints() const {
    return points_;
  }

 private:
  std::vector<std::pair<double, double>> points_;
};

inline double epsilon_at(const EpsilonSchedule& schedule, double x) {
  return schedule.at(x);
}

}  // namespace normgrid
