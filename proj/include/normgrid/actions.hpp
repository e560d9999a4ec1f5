#pragma once
// The joint action set: 29 moves (all cell offsets with dx^2 + dy^2 <= 9,
// including the stay-put move) plus 4 gathers aimed at the cardinally
// adjacent cells. 33 actions total, in a frozen enumeration order.

#include <array>
#include <stdexcept>
#include <vector>

namespace normgrid {

inline constexpr int kMoveRangeSq = 9;    // move offsets satisfy dx^2+dy^2 <= 9
inline constexpr int kGatherRangeSq = 1;  // gather offsets satisfy dx^2+dy^2 == 1
inline constexpr int kActionCount = 33;

struct Action {
  enum class Kind { kMove, kGather };
  Kind kind = Kind::kMove;
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

// Enumeration order: moves first, scanned by dy then dx ascending, then the
// four gathers in the same scan order. Frozen: indices are part of the
// serialized-policy and trace formats.
inline const std::array<Action, kActionCount>& action_table() {
  static const std::array<Action, kActionCount> table = [] {
    std::array<Action, kActionCount> t{};
    int i = 0;
    for (int dy = -3; dy <= 3; ++dy) {
      for (int dx = -3; dx <= 3; ++dx) {
        if (dx * dx + dy * dy <= kMoveRangeSq) {
          t[i++] = Action{Action::Kind::kMove, dx, dy};
        }
      }
    }
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx * dx + dy * dy == kGatherRangeSq) {
          t[i++] = Action{Action::Kind::kGather, dx, dy};
        }
      }
    }
    if (i != kActionCount) throw std::logic_error("action table size mismatch");
    return t;
  }();
  return table;
}

inline const Action& action_at(int index) {
  if (index < 0 || index >= kActionCount) {
    throw std::out_of_range("action index out of range");
  }
  return action_table()[static_cast<std::size_t>(index)];
}

inline bool is_gather_action(int index) {
  return action_at(index).kind == Action::Kind::kGather;
}

// Index of the stay-put move.
inline int noop_action() {
  static const int idx = [] {
    const auto& t = action_table();
    for (int i = 0; i < kActionCount; ++i) {
      if (t[static_cast<std::size_t>(i)] == Action{Action::Kind::kMove, 0, 0}) {
        return i;
      }
    }
    throw std::logic_error("no stay-put action");
  }();
  return idx;
}

}  // namespace normgrid
