#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <stdexcept>

#include "normgrid/actions.hpp"

using namespace normgrid;

TEST_CASE("action table has 29 moves then 4 gathers") {
  const auto& table = action_table();
  REQUIRE(static_cast<int>(table.size()) == kActionCount);
  REQUIRE(kActionCount == 33);

  int moves = 0;
  int gathers = 0;
  for (const Action& a : table) {
    if (a.kind == Action::Kind::kMove) ++moves;
    if (a.kind == Action::Kind::kGather) ++gathers;
  }
  CHECK(moves == 29);
  CHECK(gathers == 4);
  for (int i = 0; i < 29; ++i) CHECK(table[i].kind == Action::Kind::kMove);
  for (int i = 29; i < 33; ++i) CHECK(table[i].kind == Action::Kind::kGather);
}

TEST_CASE("move offsets fill the radius-3 disc in scan order") {
  const auto& table = action_table();
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 29; ++i) {
    const Action& a = table[i];
    CHECK(a.dx * a.dx + a.dy * a.dy <= kMoveRangeSq);
    seen.insert({a.dx, a.dy});
  }
  CHECK(seen.size() == 29);

  // dy-then-dx ascending scan pins the endpoints and the center.
  CHECK(table[0].dx == 0);
  CHECK(table[0].dy == -3);
  CHECK(table[1].dx == -2);
  CHECK(table[1].dy == -2);
  CHECK(table[28].dx == 0);
  CHECK(table[28].dy == 3);
  CHECK(noop_action() == 14);
  CHECK(table[14].dx == 0);
  CHECK(table[14].dy == 0);
}

TEST_CASE("gather offsets are the four unit neighbors in scan order") {
  const auto& table = action_table();
  CHECK(table[29].dx == 0);
  CHECK(table[29].dy == -1);
  CHECK(table[30].dx == -1);
  CHECK(table[30].dy == 0);
  CHECK(table[31].dx == 1);
  CHECK(table[31].dy == 0);
  CHECK(table[32].dx == 0);
  CHECK(table[32].dy == 1);
  for (int i = 29; i < 33; ++i) {
    CHECK(table[i].dx * table[i].dx + table[i].dy * table[i].dy == kGatherRangeSq);
  }
}

TEST_CASE("is_gather_action splits the index range") {
  for (int i = 0; i < 29; ++i) CHECK_FALSE(is_gather_action(i));
  for (int i = 29; i < 33; ++i) CHECK(is_gather_action(i));
}

TEST_CASE("action_at rejects bad indices") {
  CHECK_THROWS_AS(action_at(-1), std::out_of_range);
  CHECK_THROWS_AS(action_at(33), std::out_of_range);
}
