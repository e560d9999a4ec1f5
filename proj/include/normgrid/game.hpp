#pragma once
// Normal-form game containers and pure-strategy equilibrium analysis:
// strict/weak Nash classification by unilateral deviation, exhaustive
// pure-equilibrium enumeration, and the compliance-enforcement predicate
// (does unilateral defection against all-compliant opponents ever pay?).

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace normgrid {

class NormalFormGame {
 public:
  explicit NormalFormGame(std::vector<std::vector<std::string>> strategy_labels)
      : labels_(std::move(strategy_labels)) {
    if (labels_.empty()) {
      throw std::invalid_argument("NormalFormGame: need at least one player");
    }
    std::size_t profiles = 1;
    for (const auto& ls : labels_) {
      if (ls.empty()) {
        throw std::invalid_argument("NormalFormGame: player without strategies");
      }
      profiles *= ls.size();
    }
    payoffs_.assign(profiles * labels_.size(), 0.0);
    filled_.assign(profiles, false);
  }

  int players() const { return static_cast<int>(labels_.size()); }
  int strategy_count(int player) const {
    return static_cast<int>(labels_.at(static_cast<std::size_t>(player)).size());
  }
  const std::string& strategy_label(int player, int strategy) const {
    return labels_.at(static_cast<std::size_t>(player))
        .at(static_cast<std::size_t>(strategy));
  }

  void set_payoffs(const std::vector<int>& profile, std::vector<double> payoffs) {
    if (static_cast<int>(payoffs.size()) != players()) {
      throw std::invalid_argument("set_payoffs: one payoff per player");
    }
    const std::size_t idx = profile_index(profile);
    for (int p = 0; p < players(); ++p) {
      payoffs_[idx * static_cast<std::size_t>(players()) +
               static_cast<std::size_t>(p)] = payoffs[static_cast<std::size_t>(p)];
    }
    filled_[idx] = true;
  }

  double payoff(const std::vector<int>& profile, int player) const {
    if (player < 0 || player >= players()) {
      throw std::out_of_range("payoff: bad player");
    }
    const std::size_t idx = profile_index(profile);
    if (!filled_[idx]) throw std::logic_error("payoff: profile not filled");
    return payoffs_[idx * static_cast<std::size_t>(players()) +
                    static_cast<std::size_t>(player)];
  }

  bool complete() const {
    for (const bool f : filled_) {
      if (!f) return false;
    }
    return true;
  }

  // All strategy profiles in odometer order (player 0 fastest).
  std::vector<std::vector<int>> profiles() const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(players()), 0);
    for (;;) {
      out.push_back(cur);
      int p = 0;
      while (p < players()) {
        if (++cur[static_cast<std::size_t>(p)] < strategy_count(p)) break;
        cur[static_cast<std::size_t>(p)] = 0;
        ++p;
      }
      if (p == players()) return out;
    }
  }

  // Index of a labeled strategy for one player, if present.
  std::optional<int> find_strategy(int player, const std::string& label) const {
    const auto& ls = labels_.at(static_cast<std::size_t>(player));
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (ls[i] == label) return static_cast<int>(i);
    }
    return std::nullopt;
  }

 private:
  std::size_t profile_index(const std::vector<int>& profile) const {
    if (static_cast<int>(profile.size()) != players()) {
      throw std::invalid_argument("profile: one strategy per player");
    }
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int p = 0; p < players(); ++p) {
      const int s = profile[static_cast<std::size_t>(p)];
      if (s < 0 || s >= strategy_count(p)) {
        throw std::out_of_range("profile: bad strategy index");
      }
      idx += static_cast<std::size_t>(s) * stride;
      stride *= static_cast<std::size_t>(strategy_count(p));
    }
    return idx;
  }

  std::vector<std::vector<std::string>> labels_;
  std::vector<double> payoffs_;  // profile-major, then player
  std::vector<bool> filled_;
};

// Two players, two labeled strategies each. cells[i][j] holds the (row,
// column) payoffs when row plays strategy i and column plays strategy j.
struct PayoffMatrix2x2 {
  std::array<std::string, 2> labels{"C", "D"};
  std::array<std::array<std::array<double, 2>, 2>, 2> cells{};

  NormalFormGame to_game() const {
    NormalFormGame g({{labels[0], labels[1]}, {labels[0], labels[1]}});
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        g.set_payoffs({i, j}, {cells[static_cast<std::size_t>(i)]
                                    [static_cast<std::size_t>(j)][0],
                               cells[static_cast<std::size_t>(i)]
                                    [static_cast<std::size_t>(j)][1]});
      }
    }
    return g;
  }
};

enum class NashKind { kStrictNash, kWeakNash, kNotNash };

inline const char* nash_kind_name(NashKind k) {
  switch (k) {
    case NashKind::kStrictNash: return "strict";
    case NashKind::kWeakNash: return "weak";
    case NashKind::kNotNash: return "not_nash";
  }
  return "unknown";
}

// Classification by unilateral deviation: any strictly improving deviation
// kills the profile; otherwise ties anywhere downgrade strict to weak.
inline NashKind is_nash(const NormalFormGame& game, const std::vector<int>& profile) {
  if (!game.complete()) throw std::logic_error("is_nash: payoffs incomplete");
  bool tie_somewhere = false;
  for (int p = 0; p < game.players(); ++p) {
    const double here = game.payoff(profile, p);
    std::vector<int> deviated = profile;
    for (int s = 0; s < game.strategy_count(p); ++s) {
      if (s == profile[static_cast<std::size_t>(p)]) continue;
      deviated[static_cast<std::size_t>(p)] = s;
      const double there = game.payoff(deviated, p);
      if (there > here) return NashKind::kNotNash;
      if (there == here) tie_somewhere = true;
    }
    deviated[static_cast<std::size_t>(p)] = profile[static_cast<std::size_t>(p)];
  }
  return tie_somewhere ? NashKind::kWeakNash : NashKind::kStrictNash;
}

struct EquilibriumClassification {
  std::vector<int> profile;
  NashKind kind = NashKind::kNotNash;
};

inline std::vector<EquilibriumClassification> pure_nash_set(
    const NormalFormGame& game) {
  std::vector<EquilibriumClassification> out;
  for (const auto& profile : game.profiles()) {
    const NashKind kind = is_nash(game, profile);
    if (kind != NashKind::kNotNash) out.push_back({profile, kind});
  }
  return out;
}

struct EnforcementResult {
  bool holds = false;
  // Per player: payoff(compliant, others compliant) minus
  // payoff(defect, others compliant).
  std::vector<double> margins;
};

// Enforcement holds when no player gains by unilaterally defecting against
// an otherwise all-compliant profile (weak inequality: every margin >= 0).
inline EnforcementResult enforcement_holds(const NormalFormGame& game,
                                           const std::string& compliant = "C",
                                           const std::string& defect = "D") {
  if (!game.complete()) throw std::logic_error("enforcement_holds: payoffs incomplete");
  std::vector<int> all_c(static_cast<std::size_t>(game.players()), 0);
  std::vector<int> d_index(static_cast<std::size_t>(game.players()), 0);
  for (int p = 0; p < game.players(); ++p) {
    const auto c = game.find_strategy(p, compliant);
    const auto d = game.find_strategy(p, defect);
    if (!c || !d) {
      throw std::invalid_argument("enforcement_holds: player lacks labeled strategies");
    }
    all_c[static_cast<std::size_t>(p)] = *c;
    d_index[static_cast<std::size_t>(p)] = *d;
  }

  EnforcementResult result;
  result.holds = true;
  for (int p = 0; p < game.players(); ++p) {
    std::vector<int> deviated = all_c;
    deviated[static_cast<std::size_t>(p)] = d_index[static_cast<std::size_t>(p)];
    const double margin = game.payoff(all_c, p) - game.payoff(deviated, p);
    result.margins.push_back(margin);
    if (margin < 0.0) result.holds = false;
  }
  return result;
}

inline EnforcementResult enforcement_holds(const PayoffMatrix2x2& matrix) {
  const NormalFormGame game = matrix.to_game();
  return enforcement_holds(game, matrix.labels[0], matrix.labels[1]);
}

}  // namespace normgrid
