#pragma once
// Sparse feature extraction over gridworld observations, and the linear
// value approximator built on it. Each feature block contributes exactly one
// active index per observation, so value lookups and updates touch only a
// handful of weights.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "normgrid/learner.hpp"
#include "normgrid/world.hpp"

namespace normgrid {

struct FeatureLayout {
  int tree_clamp = 4;      // nearest-tree offset clamped per axis to [-c, c]
  int sectors = 3;         // own position bucketed into sectors x sectors
  bool flagged_offset = false;  // nearest currently-flagged agent offset block
  int flagged_clamp = 3;

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

// Blocks, in order: bias, nearest-tree offset (plus a "none" slot), own
// sector, last-reward bucket {0, (0,3], >3}, and optionally the offset to
// the nearest flagged agent (plus a "none" slot). The verdict vector is
// runtime state fed in at episode boundaries; it makes detector output part
// of the learner's decision input.
class GridFeaturizer {
 public:
  explicit GridFeaturizer(FeatureLayout layout = {}) : layout_(layout) {
    if (layout_.tree_clamp < 1 || layout_.flagged_clamp < 1 || layout_.sectors < 1) {
      throw std::invalid_argument("GridFeaturizer: layout bounds must be >= 1");
    }
    const int tree_side = 2 * layout_.tree_clamp + 1;
    const int flag_side = 2 * layout_.flagged_clamp + 1;
    tree_block_ = 1;
    sector_block_ = tree_block_ + tree_side * tree_side + 1;
    reward_block_ = sector_block_ + layout_.sectors * layout_.sectors;
    flagged_block_ = reward_block_ + 3;
    count_ = flagged_block_ +
             (layout_.flagged_offset ? flag_side * flag_side + 1 : 0);
  }

  const FeatureLayout& layout() const { return layout_; }
  int feature_count() const { return count_; }

  void set_verdicts(std::vector<bool> verdicts) { verdicts_ = std::move(verdicts); }
  const std::vector<bool>& verdicts() const { return verdicts_; }

  void extract(const Observation& obs, std::vector<int>& out) const {
    out.clear();
    out.push_back(0);  // bias

    // Nearest tree by squared distance, ties to the lowest tree slot.
    {
      int best = -1;
      long best_d = std::numeric_limits<long>::max();
      for (std::size_t i = 0; i < obs.tree_positions.size(); ++i) {
        const long dx = obs.tree_positions[i].x - obs.own_pos.x;
        const long dy = obs.tree_positions[i].y - obs.own_pos.y;
        const long d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      if (best < 0) {
        out.push_back(tree_block_ + offset_slots(layout_.tree_clamp));
      } else {
        out.push_back(tree_block_ +
                      offset_slot(obs.tree_positions[static_cast<std::size_t>(best)],
                                  obs.own_pos, layout_.tree_clamp));
      }
    }

    // Own-position sector.
    {
      const int sx = bucket(obs.own_pos.x, obs.grid_width, layout_.sectors);
      const int sy = bucket(obs.own_pos.y, obs.grid_height, layout_.sectors);
      out.push_back(sector_block_ + sy * layout_.sectors + sx);
    }

    // Last-reward bucket.
    {
      int b = 0;
      if (obs.last_reward > 0.0) b = obs.last_reward <= 3.0 ? 1 : 2;
      out.push_back(reward_block_ + b);
    }

    if (layout_.flagged_offset) {
      int best = -1;
      long best_d = std::numeric_limits<long>::max();
      for (std::size_t i = 0; i < obs.agent_positions.size(); ++i) {
        if (static_cast<int>(i) == obs.own_id) continue;
        if (i >= verdicts_.size() || !verdicts_[i]) continue;
        const long dx = obs.agent_positions[i].x - obs.own_pos.x;
        const long dy = obs.agent_positions[i].y - obs.own_pos.y;
        const long d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      if (best < 0) {
        out.push_back(flagged_block_ + offset_slots(layout_.flagged_clamp));
      } else {
        out.push_back(flagged_block_ +
                      offset_slot(obs.agent_positions[static_cast<std::size_t>(best)],
                                  obs.own_pos, layout_.flagged_clamp));
      }
    }
  }

  std::vector<int> extract(const Observation& obs) const {
    std::vector<int> out;
    extract(obs, out);
    return out;
  }

  nlohmann::json to_json() const {
    return {{"tree_clamp", layout_.tree_clamp},
            {"sectors", layout_.sectors},
            {"flagged_offset", layout_.flagged_offset},
            {"flagged_clamp", layout_.flagged_clamp},
            {"verdicts", verdicts_}};
  }

  static GridFeaturizer from_json(const nlohmann::json& j) {
    FeatureLayout layout;
    layout.tree_clamp = j.at("tree_clamp").get<int>();
    layout.sectors = j.at("sectors").get<int>();
    layout.flagged_offset = j.at("flagged_offset").get<bool>();
    layout.flagged_clamp = j.at("flagged_clamp").get<int>();
    GridFeaturizer out(layout);
    out.set_verdicts(j.at("verdicts").get<std::vector<bool>>());
    return out;
  }

 private:
  static int clamp_axis(int v, int c) { return v < -c ? -c : (v > c ? c : v); }

  static int offset_slot(Cell target, Cell own, int c) {
    const int dx = clamp_axis(target.x - own.x, c);
    const int dy = clamp_axis(target.y - own.y, c);
    const int side = 2 * c + 1;
    return (dy + c) * side + (dx + c);
  }

  static int offset_slots(int c) {
    const int side = 2 * c + 1;
    return side * side;  // the trailing "none" slot
  }

  static int bucket(int v, int extent, int buckets) {
    if (extent <= 0) return 0;
    const int b = v * buckets / extent;
    return b >= buckets ? buckets - 1 : (b < 0 ? 0 : b);
  }

  FeatureLayout layout_;
  std::vector<bool> verdicts_;
  int tree_block_ = 0;
  int sector_block_ = 0;
  int reward_block_ = 0;
  int flagged_block_ = 0;
  int count_ = 0;
};

// Q(obs, a) = sum of W[f][a] over the active features f. adjust() spreads
// delta evenly over the active features so the queried value moves by
// exactly delta, mirroring the tabular behavior.
class LinearApproximator : public ValueApproximator {
 public:
  explicit LinearApproximator(std::shared_ptr<GridFeaturizer> featurizer)
      : featurizer_(std::move(featurizer)) {
    if (!featurizer_) {
      throw std::invalid_argument("LinearApproximator: missing featurizer");
    }
    weights_.assign(
        static_cast<std::size_t>(featurizer_->feature_count()) * kActionCount, 0.0);
  }

  const std::shared_ptr<GridFeaturizer>& featurizer() const { return featurizer_; }

  std::vector<double> action_values(const Observation& obs,
                                    std::span<const int> feature_cache = {}) const override {
    std::vector<double> values(kActionCount, 0.0);
    const auto accumulate = [&](std::span<const int> features) {
      for (const int f : features) {
        const double* row = &weights_[static_cast<std::size_t>(f) * kActionCount];
        for (int a = 0; a < kActionCount; ++a) {
          values[static_cast<std::size_t>(a)] += row[a];
        }
      }
    };
    if (!feature_cache.empty()) {
      accumulate(feature_cache);
    } else {
      featurizer_->extract(obs, scratch_);
      accumulate(scratch_);
    }
    return values;
  }

  void adjust(const Observation& obs, std::span<const int> feature_cache,
              int action, double delta) override {
    if (action < 0 || action >= kActionCount) {
      throw std::out_of_range("LinearApproximator: bad action");
    }
    const auto apply = [&](std::span<const int> features) {
      const double share = delta / static_cast<double>(features.size());
      for (const int f : features) {
        weights_[static_cast<std::size_t>(f) * kActionCount +
                 static_cast<std::size_t>(action)] += share;
      }
    };
    if (!feature_cache.empty()) {
      apply(feature_cache);
    } else {
      featurizer_->extract(obs, scratch_);
      apply(scratch_);
    }
  }

  nlohmann::json to_json() const override {
    return {{"kind", "linear"},
            {"version", 1},
            {"featurizer", featurizer_->to_json()},
            {"weights", weights_}};
  }

  static std::unique_ptr<LinearApproximator> from_json(const nlohmann::json& j) {
    if (j.at("kind") != "linear" || j.at("version") != 1) {
      throw std::invalid_argument("LinearApproximator: bad serialized form");
    }
    auto featurizer =
        std::make_shared<GridFeaturizer>(GridFeaturizer::from_json(j.at("featurizer")));
    auto out = std::make_unique<LinearApproximator>(std::move(featurizer));
    out->weights_ = j.at("weights").get<std::vector<double>>();
    const std::size_t expected =
        static_cast<std::size_t>(out->featurizer_->feature_count()) * kActionCount;
    if (out->weights_.size() != expected) {
      throw std::invalid_argument("LinearApproximator: weight size mismatch");
    }
    return out;
  }

  std::unique_ptr<ValueApproximator> clone() const override {
    auto copy = std::make_unique<LinearApproximator>(
        std::make_shared<GridFeaturizer>(*featurizer_));
    copy->weights_ = weights_;
    return copy;
  }

 private:
  std::shared_ptr<GridFeaturizer> featurizer_;
  std::vector<double> weights_;  // [feature][action], action-contiguous
  mutable std::vector<int> scratch_;
};

// Round-trip for any approximator this library defines.
inline std::unique_ptr<ValueApproximator> approximator_from_json(
    const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tabular") return TabularApproximator::from_json(j);
  if (kind == "linear") return LinearApproximator::from_json(j);
  throw std::invalid_argument("unknown approximator kind: " + kind);
}

}  // namespace normgrid
