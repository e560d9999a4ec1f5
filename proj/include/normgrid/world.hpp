#pragma once
// Replenishing-resource gridworld. Apple trees hold unlimited supply while
// alive but die once more than tree_capacity apples have been taken from
// them, at which point they respawn at a random free cell. Agents move
// simultaneously (conflicts resolved in ascending id order) and gather from
// cardinally adjacent cells, collecting their per-step harvest cap.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "normgrid/actions.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/trace.hpp"

namespace normgrid {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Per-step harvest cap, cycled by world step index. A fixed cap is a
// one-element cycle; weak agents alternate {3, 2}.
struct Capability {
  std::vector<int> cap_cycle{3};

  int cap_at(int step) const {
    if (cap_cycle.empty()) throw std::logic_error("Capability: empty cap cycle");
    return cap_cycle[static_cast<std::size_t>(step) % cap_cycle.size()];
  }
};

struct AppleTree {
  Cell pos;
  int harvested_total = 0;
};

struct AgentState {
  int agent_id = 0;
  Cell pos;
  int last_action = -1;  // -1 until the agent has acted once
  double last_reward = 0.0;
  double episode_return = 0.0;
};

struct WorldConfig {
  int width = 20;
  int height = 20;
  int tree_count = 15;
  int episode_length = 1000;
  int tree_capacity = 5;  // death once harvested_total exceeds this
  std::vector<Capability> capabilities;  // one per agent
  std::vector<Cell> walls;
  // Optional fixed layouts for tests/debugging; empty means seeded random
  // placement over free cells. When set, sizes must match the counts above.
  std::vector<Cell> agent_positions;
  std::vector<Cell> tree_positions;
};

inline constexpr int kViewRange = 2;
inline constexpr int kViewSize = 2 * kViewRange + 1;
inline constexpr int kSpatialChannels = 3;  // other agents, walls, trees
inline constexpr int kSpatialSize = kSpatialChannels * kViewSize * kViewSize;

// Local view plus flat context vector. Nonspatial layout (doubles):
//   [0, 33)            one-hot of own previous action (all zero on step 0)
//   [33]               own previous raw reward
//   [34, 34+2n)        absolute (x, y) of every agent, id order
//   [34+2n, 34+2n+2m)  absolute (x, y) of every tree slot
//   last two           own position normalized to [0, 1]
// Structured copies of the same state are kept alongside so feature
// extractors do not have to re-parse the flat layout.
struct Observation {
  std::array<double, kSpatialSize> spatial{};
  std::vector<double> nonspatial;

  int own_id = 0;
  Cell own_pos;
  int last_action = -1;
  double last_reward = 0.0;
  std::vector<Cell> agent_positions;
  std::vector<Cell> tree_positions;
  int grid_width = 0;
  int grid_height = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

class GridWorld {
 public:
  GridWorld(WorldConfig config, std::uint64_t seed)
      : config_(std::move(config)), rng_(seed) {
    validate_config();
    const int n = agent_count();
    const int m = config_.tree_count;

    wall_mask_.assign(cell_count(), 0);
    for (const Cell& w : config_.walls) {
      wall_mask_[cell_index(w)] = 1;
    }

    agents_.resize(static_cast<std::size_t>(n));
    trees_.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i) {
      agents_[static_cast<std::size_t>(i)].agent_id = i;
    }

    if (!config_.agent_positions.empty() || !config_.tree_positions.empty()) {
      place_fixed();
    } else {
      place_random();
    }
  }

  int width() const { return config_.width; }
  int height() const { return config_.height; }
  int agent_count() const { return static_cast<int>(config_.capabilities.size()); }
  int episode_length() const { return config_.episode_length; }
  int step_index() const { return step_index_; }
  bool done() const { return step_index_ >= config_.episode_length; }
  const WorldConfig& config() const { return config_; }

  const AgentState& agent(int id) const {
    return agents_.at(static_cast<std::size_t>(id));
  }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<AppleTree>& trees() const { return trees_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < config_.width && c.y >= 0 && c.y < config_.height;
  }
  bool is_wall(Cell c) const { return wall_mask_[cell_index(c)] != 0; }

  // Lifetime apples taken, including from trees that have since died.
  double total_harvested() const {
    double total = retired_harvest_;
    for (const auto& t : trees_) total += t.harvested_total;
    return total;
  }

  // Advance one step with one action index per agent. Returns raw per-agent
  // rewards (apples gathered this step).
  std::vector<double> step(const std::vector<int>& actions) {
    const int n = agent_count();
    if (static_cast<int>(actions.size()) != n) {
      throw std::invalid_argument("step: need one action per agent");
    }
    if (done()) throw std::logic_error("step: episode already over");
    for (int a : actions) {
      if (a < 0 || a >= kActionCount) {
        throw std::out_of_range("step: action index out of range");
      }
    }

    std::vector<double> rewards(static_cast<std::size_t>(n), 0.0);
    // Single ascending-id pass: movers block on walls, bounds and agent
    // occupancy as of their turn; gatherers draw their full per-step cap
    // from the shared tree counter (trees never run dry mid-step).
    for (int id = 0; id < n; ++id) {
      AgentState& ag = agents_[static_cast<std::size_t>(id)];
      const Action& act = action_at(actions[static_cast<std::size_t>(id)]);
      if (act.kind == Action::Kind::kMove) {
        const Cell target{ag.pos.x + act.dx, ag.pos.y + act.dy};
        if (in_bounds(target) && !is_wall(target) &&
            !occupied_by_agent(target, id)) {
          ag.pos = target;
        }
      } else {
        const Cell target{ag.pos.x + act.dx, ag.pos.y + act.dy};
        if (in_bounds(target)) {
          if (AppleTree* tree = tree_at(target)) {
            const int yield =
                config_.capabilities[static_cast<std::size_t>(id)].cap_at(step_index_);
            tree->harvested_total += yield;
            rewards[static_cast<std::size_t>(id)] = yield;
          }
        }
      }
    }

    // End of step: over-harvested trees die and respawn elsewhere.
    for (auto& tree : trees_) {
      if (tree.harvested_total > config_.tree_capacity) {
        retired_harvest_ += tree.harvested_total;
        tree.pos = random_free_cell(&tree);
        tree.harvested_total = 0;
      }
    }

    for (int id = 0; id < n; ++id) {
      AgentState& ag = agents_[static_cast<std::size_t>(id)];
      ag.last_action = actions[static_cast<std::size_t>(id)];
      ag.last_reward = rewards[static_cast<std::size_t>(id)];
      ag.episode_return += rewards[static_cast<std::size_t>(id)];
    }
    ++step_index_;
    return rewards;
  }

 private:
  void validate_config() {
    if (config_.width < 1 || config_.height < 1) {
      throw std::invalid_argument("world: grid dimensions must be positive");
    }
    if (config_.capabilities.empty()) {
      throw std::invalid_argument("world: need at least one agent capability");
    }
    if (config_.tree_count < 0) {
      throw std::invalid_argument("world: tree count must be non-negative");
    }
    if (config_.episode_length < 1) {
      throw std::invalid_argument("world: episode length must be positive");
    }
    if (config_.tree_capacity < 1) {
      throw std::invalid_argument("world: tree capacity must be positive");
    }
    for (const Cell& w : config_.walls) {
      if (!in_bounds_raw(w)) {
        throw std::invalid_argument("world: wall out of bounds");
      }
    }
    int free_cells = config_.width * config_.height -
                     static_cast<int>(count_walls());
    if (agent_count() + config_.tree_count > free_cells) {
      throw std::invalid_argument(
          "world: agents + trees exceed available free cells");
    }
  }

  std::size_t count_walls() const {
    // Walls may repeat in the config list; count distinct cells.
    std::vector<Cell> distinct = config_.walls;
    std::sort(distinct.begin(), distinct.end(),
              [](Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    return distinct.size();
  }

  bool in_bounds_raw(Cell c) const {
    return c.x >= 0 && c.x < config_.width && c.y >= 0 && c.y < config_.height;
  }

  std::size_t cell_index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(config_.width) +
           static_cast<std::size_t>(c.x);
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(config_.width) *
           static_cast<std::size_t>(config_.height);
  }

  bool occupied_by_agent(Cell c, int except_id) const {
    for (const auto& ag : agents_) {
      if (ag.agent_id != except_id && ag.pos == c) return true;
    }
    return false;
  }

  AppleTree* tree_at(Cell c) {
    for (auto& t : trees_) {
      if (t.pos == c) return &t;
    }
    return nullptr;
  }

  void place_fixed() {
    if (static_cast<int>(config_.agent_positions.size()) != agent_count() ||
        static_cast<int>(config_.tree_positions.size()) != config_.tree_count) {
      throw std::invalid_argument(
          "world: fixed placements must cover every agent and tree");
    }
    std::vector<Cell> all = config_.agent_positions;
    all.insert(all.end(), config_.tree_positions.begin(),
               config_.tree_positions.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!in_bounds_raw(all[i]) || is_wall(all[i])) {
        throw std::invalid_argument("world: fixed placement on wall or outside");
      }
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if (all[i] == all[j]) {
          throw std::invalid_argument("world: fixed placements must be distinct");
        }
      }
    }
    for (int i = 0; i < agent_count(); ++i) {
      agents_[static_cast<std::size_t>(i)].pos =
          config_.agent_positions[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < config_.tree_count; ++i) {
      trees_[static_cast<std::size_t>(i)].pos =
          config_.tree_positions[static_cast<std::size_t>(i)];
    }
  }

  void place_random() {
    std::vector<Cell> free;
    for (int y = 0; y < config_.height; ++y) {
      for (int x = 0; x < config_.width; ++x) {
        const Cell c{x, y};
        if (!is_wall(c)) free.push_back(c);
      }
    }
    rng_.shuffle(free);
    std::size_t k = 0;
    for (auto& ag : agents_) ag.pos = free[k++];
    for (auto& t : trees_) t.pos = free[k++];
  }

  // Uniform over cells that are not walls, not under an agent, and not under
  // another live tree. The dying tree's own cell is eligible again.
  Cell random_free_cell(const AppleTree* replacing) {
    std::vector<Cell> candidates;
    candidates.reserve(cell_count());
    for (int y = 0; y < config_.height; ++y) {
      for (int x = 0; x < config_.width; ++x) {
        const Cell c{x, y};
        if (is_wall(c)) continue;
        if (occupied_by_agent(c, -1)) continue;
        bool taken = false;
        for (const auto& t : trees_) {
          if (&t != replacing && t.pos == c) {
            taken = true;
            break;
          }
        }
        if (!taken) candidates.push_back(c);
      }
    }
    if (candidates.empty()) {
      throw std::logic_error("world: no free cell for tree respawn");
    }
    return candidates[static_cast<std::size_t>(rng_.bounded(candidates.size()))];
  }

  WorldConfig config_;
  Rng rng_;
  std::vector<std::uint8_t> wall_mask_;
  std::vector<AgentState> agents_;
  std::vector<AppleTree> trees_;
  int step_index_ = 0;
  double retired_harvest_ = 0.0;
};

// Pure local view for one agent. Spatial channels are circle-masked: cells
// with dx^2 + dy^2 > kViewRange^2 stay zero. Out-of-bounds cells inside the
// circle read as walls.
inline Observation observe(const GridWorld& world, int agent_id) {
  if (agent_id < 0 || agent_id >= world.agent_count()) {
    throw std::out_of_range("observe: bad agent id");
  }
  const AgentState& self = world.agent(agent_id);
  Observation obs;
  obs.own_id = agent_id;
  obs.own_pos = self.pos;
  obs.last_action = self.last_action;
  obs.last_reward = self.last_reward;
  obs.grid_width = world.width();
  obs.grid_height = world.height();

  const auto plane = [](int channel, int dx, int dy) {
    return static_cast<std::size_t>(channel) * kViewSize * kViewSize +
           static_cast<std::size_t>(dy + kViewRange) * kViewSize +
           static_cast<std::size_t>(dx + kViewRange);
  };
  for (int dy = -kViewRange; dy <= kViewRange; ++dy) {
    for (int dx = -kViewRange; dx <= kViewRange; ++dx) {
      if (dx * dx + dy * dy > kViewRange * kViewRange) continue;
      const Cell c{self.pos.x + dx, self.pos.y + dy};
      if (!world.in_bounds(c)) {
        obs.spatial[plane(1, dx, dy)] = 1.0;
        continue;
      }
      if (world.is_wall(c)) obs.spatial[plane(1, dx, dy)] = 1.0;
      for (const auto& ag : world.agents()) {
        if (ag.agent_id != agent_id && ag.pos == c) {
          obs.spatial[plane(0, dx, dy)] = 1.0;
          break;
        }
      }
      for (const auto& t : world.trees()) {
        if (t.pos == c) {
          obs.spatial[plane(2, dx, dy)] = 1.0;
          break;
        }
      }
    }
  }

  obs.agent_positions.reserve(static_cast<std::size_t>(world.agent_count()));
  for (const auto& ag : world.agents()) obs.agent_positions.push_back(ag.pos);
  obs.tree_positions.reserve(world.trees().size());
  for (const auto& t : world.trees()) obs.tree_positions.push_back(t.pos);

  obs.nonspatial.reserve(static_cast<std::size_t>(kActionCount) + 1 +
                         2 * obs.agent_positions.size() +
                         2 * obs.tree_positions.size() + 2);
  for (int a = 0; a < kActionCount; ++a) {
    obs.nonspatial.push_back(a == self.last_action ? 1.0 : 0.0);
  }
  obs.nonspatial.push_back(self.last_reward);
  for (const Cell& c : obs.agent_positions) {
    obs.nonspatial.push_back(static_cast<double>(c.x));
    obs.nonspatial.push_back(static_cast<double>(c.y));
  }
  for (const Cell& c : obs.tree_positions) {
    obs.nonspatial.push_back(static_cast<double>(c.x));
    obs.nonspatial.push_back(static_cast<double>(c.y));
  }
  const double wd = std::max(world.width() - 1, 1);
  const double hd = std::max(world.height() - 1, 1);
  obs.nonspatial.push_back(self.pos.x / wd);
  obs.nonspatial.push_back(self.pos.y / hd);
  return obs;
}

// Text rendering for debugging: '.' empty, '#' wall, 'T' tree, digits for
// agents (id mod 10; agents draw over trees when sharing a cell).
inline std::string snapshot(const GridWorld& world) {
  std::string out;
  out.reserve(static_cast<std::size_t>((world.width() + 1) * world.height()));
  for (int y = 0; y < world.height(); ++y) {
    for (int x = 0; x < world.width(); ++x) {
      const Cell c{x, y};
      char glyph = world.is_wall(c) ? '#' : '.';
      for (const auto& t : world.trees()) {
        if (t.pos == c) glyph = 'T';
      }
      for (const auto& ag : world.agents()) {
        if (ag.pos == c) glyph = static_cast<char>('0' + ag.agent_id % 10);
      }
      out.push_back(glyph);
    }
    out.push_back('\n');
  }
  return out;
}

struct StepRecord {
  int step = 0;
  std::vector<int> actions;
  std::vector<double> raw_rewards;
};

using PolicyFn = std::function<int(const Observation&)>;
using StepHook = std::function<void(const GridWorld&, const StepRecord&)>;

struct EpisodeResult {
  std::vector<double> returns;       // raw per-agent episode returns
  std::vector<BehaviorTrace> traces; // one per agent, episode-local steps
};

// Drives a fresh world for its whole episode. The hook runs after every step
// and sees the post-step world; shaping and detection layers hang off it.
inline EpisodeResult run_episode(GridWorld& world,
                                 const std::vector<PolicyFn>& policies,
                                 const StepHook& hook = {}) {
  const int n = world.agent_count();
  if (static_cast<int>(policies.size()) != n) {
    throw std::invalid_argument("run_episode: need one policy per agent");
  }
  if (world.step_index() != 0) {
    throw std::logic_error("run_episode: world already stepped");
  }

  EpisodeResult result;
  result.traces.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    result.traces[static_cast<std::size_t>(i)].agent_id = i;
  }

  StepRecord record;
  record.actions.resize(static_cast<std::size_t>(n));
  while (!world.done()) {
    record.step = world.step_index();
    for (int i = 0; i < n; ++i) {
      record.actions[static_cast<std::size_t>(i)] =
          policies[static_cast<std::size_t>(i)](observe(world, i));
    }
    record.raw_rewards = world.step(record.actions);
    for (int i = 0; i < n; ++i) {
      result.traces[static_cast<std::size_t>(i)].steps.push_back(
          TraceStep{record.step, record.actions[static_cast<std::size_t>(i)],
                    record.raw_rewards[static_cast<std::size_t>(i)]});
    }
    if (hook) hook(world, record);
  }

  result.returns.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    result.returns.push_back(world.agent(i).episode_return);
  }
  return result;
}

}  // namespace normgrid
