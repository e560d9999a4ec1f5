#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <stdexcept>
#include <vector>

#include "normgrid/features.hpp"
#include "normgrid/world.hpp"

using namespace normgrid;

namespace {

Observation obs_at(int x, int y, int w = 20, int h = 20) {
  Observation o;
  o.own_id = 0;
  o.own_pos = {x, y};
  o.grid_width = w;
  o.grid_height = h;
  o.agent_positions = {{x, y}};
  return o;
}

}  // namespace

TEST_CASE("feature layout block sizes") {
  GridFeaturizer plain{FeatureLayout{}};
  // bias 1 + tree offsets 9*9+1 + sectors 3*3 + reward buckets 3
  CHECK(plain.feature_count() == 1 + 82 + 9 + 3);

  FeatureLayout with_flags;
  with_flags.flagged_offset = true;
  GridFeaturizer flagged{with_flags};
  // adds clamp-3 offsets 7*7+1
  CHECK(flagged.feature_count() == 95 + 50);

  FeatureLayout bad;
  bad.sectors = 0;
  CHECK_THROWS_AS(GridFeaturizer{bad}, std::invalid_argument);
}

TEST_CASE("extract maps state into the documented slots") {
  GridFeaturizer fz{FeatureLayout{}};

  Observation o = obs_at(5, 5);
  o.tree_positions = {{7, 4}};
  auto f = fz.extract(o);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 0);  // bias
  // tree offset dx=2, dy=-1 clamped to a 9x9 grid -> ((-1)+4)*9 + (2+4) = 33
  CHECK(f[1] == 1 + 33);
  // own sector (0,0) of a 3x3 partition of 20x20
  CHECK(f[2] == 83);
  // last reward 0 -> first bucket
  CHECK(f[3] == 92);

  SECTION("no trees selects the trailing none slot") {
    o.tree_positions.clear();
    CHECK(fz.extract(o)[1] == 1 + 81);
  }
  SECTION("distant trees clamp to the rim") {
    o.tree_positions = {{19, 19}};  // dx=14, dy=14 -> clamps to (4,4)
    CHECK(fz.extract(o)[1] == 1 + (4 + 4) * 9 + (4 + 4));
  }
  SECTION("nearest tree wins, ties to the lower slot") {
    o.tree_positions = {{5, 6}, {6, 5}, {5, 9}};
    // (5,6) and (6,5) tie at distance 1; slot 0 wins: dx=0 dy=1 -> (1+4)*9+4
    CHECK(fz.extract(o)[1] == 1 + 5 * 9 + 4);
  }
  SECTION("reward buckets split at 0 and 3") {
    o.last_reward = 2.0;
    CHECK(fz.extract(o)[3] == 93);
    o.last_reward = 3.0;
    CHECK(fz.extract(o)[3] == 93);
    o.last_reward = 3.5;
    CHECK(fz.extract(o)[3] == 94);
  }
  SECTION("sectors bucket absolute position") {
    Observation mid = obs_at(10, 19);
    // x bucket 10*3/20 = 1, y bucket 19*3/20 = 2 -> 2*3+1
    CHECK(fz.extract(mid)[2] == 83 + 7);
  }
}

TEST_CASE("flagged-offset block tracks the nearest flagged agent") {
  FeatureLayout layout;
  layout.flagged_offset = true;
  GridFeaturizer fz{layout};

  Observation o = obs_at(5, 5);
  o.agent_positions = {{5, 5}, {6, 6}, {1, 1}};

  SECTION("nobody flagged selects the none slot") {
    fz.set_verdicts({false, false, false});
    CHECK(fz.extract(o)[4] == 95 + 49);
  }
  SECTION("nearest flagged agent offset") {
    fz.set_verdicts({false, true, true});
    // (6,6): dx=1, dy=1 -> (1+3)*7 + (1+3) = 32
    CHECK(fz.extract(o)[4] == 95 + 32);
  }
  SECTION("self is never a flag target") {
    fz.set_verdicts({true, false, true});
    // nearest flagged other is (1,1): dx=-4 clamps to -3, dy=-4 -> (0)*7+0
    CHECK(fz.extract(o)[4] == 95 + 0);
  }
  SECTION("verdicts shorter than the roster are treated as unflagged") {
    fz.set_verdicts({false});
    CHECK(fz.extract(o)[4] == 95 + 49);
  }
}

TEST_CASE("featurizer round-trips through json with verdicts") {
  FeatureLayout layout;
  layout.flagged_offset = true;
  GridFeaturizer fz{layout};
  fz.set_verdicts({true, false});

  GridFeaturizer loaded = GridFeaturizer::from_json(fz.to_json());
  CHECK(loaded.feature_count() == fz.feature_count());
  CHECK(loaded.verdicts() == fz.verdicts());
  CHECK(loaded.layout().flagged_offset);
}

TEST_CASE("linear approximator moves the queried value by exactly delta") {
  auto fz = std::make_shared<GridFeaturizer>(FeatureLayout{});
  LinearApproximator q(fz);

  Observation o = obs_at(5, 5);
  o.tree_positions = {{7, 4}};

  CHECK(q.action_values(o)[12] == 0.0);
  q.adjust(o, {}, 12, 1.25);
  CHECK(q.action_values(o)[12] == Catch::Approx(1.25).epsilon(1e-15));
  CHECK(q.action_values(o)[11] == 0.0);

  // A state sharing some but not all features moves by a partial amount.
  Observation other = obs_at(5, 5);
  other.tree_positions = {{5, 6}};
  const double shared = q.action_values(other)[12];
  CHECK(shared > 0.0);
  CHECK(shared < 1.25);

  // The cached-feature path must agree with internal extraction.
  const auto cache = fz->extract(o);
  CHECK(q.action_values(o, cache) == q.action_values(o));
  q.adjust(o, cache, 12, -1.25);
  CHECK(q.action_values(o)[12] == Catch::Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(q.adjust(o, {}, 33, 1.0), std::out_of_range);
  CHECK_THROWS_AS(LinearApproximator(nullptr), std::invalid_argument);
}

TEST_CASE("approximators reload polymorphically from json") {
  auto fz = std::make_shared<GridFeaturizer>(FeatureLayout{});
  LinearApproximator q(fz);
  Observation o = obs_at(3, 3);
  q.adjust(o, {}, 5, 2.0);

  auto loaded = approximator_from_json(q.to_json());
  CHECK(loaded->action_values(o)[5] == Catch::Approx(2.0).epsilon(1e-15));

  auto cloned = q.clone();
  q.adjust(o, {}, 5, 1.0);
  CHECK(cloned->action_values(o)[5] == Catch::Approx(2.0).epsilon(1e-15));

  nlohmann::json bogus = {{"kind", "mystery"}};
  CHECK_THROWS_AS(approximator_from_json(bogus), std::invalid_argument);
}
