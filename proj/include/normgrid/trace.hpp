#pragma once
// Append-only per-agent record of (step, action, raw reward), the input that
// behavior detectors consume.

#include <vector>

namespace normgrid {

struct TraceStep {
  int step = 0;
  int action = 0;
  double raw_reward = 0.0;
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct BehaviorTrace {
  int agent_id = -1;
  std::vector<TraceStep> steps;
};

inline std::vector<double> trace_rewards(const BehaviorTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.steps.size());
  for (const auto& s : trace.steps) out.push_back(s.raw_reward);
  return out;
}

}  // namespace normgrid
