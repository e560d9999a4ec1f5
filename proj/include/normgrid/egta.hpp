#pragma once
// Empirical game estimation: each cell of a 2x2 strategy matrix is measured
// by training a fresh roster where the two focal agents play that strategy
// pair, then averaging their frozen greedy returns over replicate seeds.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "normgrid/game.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/trainer.hpp"

namespace normgrid {

struct EgtaPlan {
  // Builds the scenario for one cell. Arguments are the strategies of focal
  // agents 0 and 1 (0 = first matrix label, 1 = second). Background agents,
  // detector wiring and shaping are the builder's business.
  std::function<ScenarioSpec(int, int)> cell_scenario;
  TrainOptions train;
  int eval_episodes = 50;
  int replicates = 3;
  std::uint64_t seed = 0;
};

struct CellEstimate {
  int row = 0;
  int col = 0;
  double payoff0 = 0.0;
  double payoff1 = 0.0;
  std::vector<double> replicate_payoff0;
  std::vector<double> replicate_payoff1;
};

struct EgtaResult {
  PayoffMatrix2x2 matrix;
  std::vector<CellEstimate> cells;  // row-major: (0,0), (0,1), (1,0), (1,1)
};

inline EgtaResult fill_empirical_matrix(const EgtaPlan& plan) {
  if (!plan.cell_scenario) throw std::invalid_argument("egta: no cell builder");
  if (plan.replicates < 1) throw std::invalid_argument("egta: replicates must be >= 1");
  if (plan.eval_episodes < 1) {
    throw std::invalid_argument("egta: eval episodes must be >= 1");
  }

  EgtaResult result;
  int cell_index = 0;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      CellEstimate cell;
      cell.row = row;
      cell.col = col;
      const ScenarioSpec scenario = plan.cell_scenario(row, col);
      if (scenario.agent_count() < 2) {
        throw std::invalid_argument("egta: scenario lacks the two focal agents");
      }
      for (int r = 0; r < plan.replicates; ++r) {
        const std::uint64_t cell_seed = derive_seed(
            plan.seed, kCellStream,
            static_cast<std::uint64_t>(cell_index) * 64 + static_cast<std::uint64_t>(r));
        const TrainedRoster roster = train_roster(scenario, plan.train, cell_seed);
        const EvalResult eval =
            evaluate_roster(scenario, roster, plan.eval_episodes, cell_seed);
        cell.replicate_payoff0.push_back(eval.mean_returns[0]);
        cell.replicate_payoff1.push_back(eval.mean_returns[1]);
      }
      double s0 = 0.0, s1 = 0.0;
      for (double v : cell.replicate_payoff0) s0 += v;
      for (double v : cell.replicate_payoff1) s1 += v;
      cell.payoff0 = s0 / static_cast<double>(plan.replicates);
      cell.payoff1 = s1 / static_cast<double>(plan.replicates);
      result.matrix.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] = {
          cell.payoff0, cell.payoff1};
      result.cells.push_back(std::move(cell));
      ++cell_index;
    }
  }
  return result;
}

}  // namespace normgrid
