#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "normgrid/rng.hpp"

using namespace normgrid;

TEST_CASE("derive_seed separates streams and indices") {
  const std::uint64_t master = 42;
  CHECK(derive_seed(master, kWorldStream, 0) == derive_seed(master, kWorldStream, 0));
  CHECK(derive_seed(master, kWorldStream, 0) != derive_seed(master, kWorldStream, 1));
  CHECK(derive_seed(master, kWorldStream, 0) != derive_seed(master, kAgentStream, 0));
  CHECK(derive_seed(master, kWorldStream, 0) != derive_seed(master + 1, kWorldStream, 0));
}

TEST_CASE("derive_seed is stable across releases") {
  // Persisted outputs depend on this mapping; a change here silently breaks
  // reproducibility of old runs, so the value is pinned.
  CHECK(derive_seed(0, 0, 0) == 0x238275bc38fcbe91ULL);
  CHECK(derive_seed(42, kWorldStream, 7) == 0xce0fffa79a80923fULL);
}

TEST_CASE("splitmix64 scrambles zero") {
  CHECK(splitmix64(0) != 0);
  CHECK(splitmix64(1) != splitmix64(2));
}

TEST_CASE("bounded stays in range and covers small domains") {
  Rng rng(123);
  bool seen[5] = {false, false, false, false, false};
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t v = rng.bounded(5);
    REQUIRE(v < 5);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
  CHECK(rng.bounded(1) == 0);
}

TEST_CASE("uniform lies in the half-open unit interval") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("same seed reproduces the same draws") {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 50; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("shuffle permutes deterministically") {
  std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> v2 = v1;
  const std::vector<int> orig = v1;

  Rng a(5);
  Rng b(5);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);

  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == orig);
}
