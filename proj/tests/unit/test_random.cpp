#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "orthoboot/error.hpp"
#include "orthoboot/parallel.hpp"
#include "orthoboot/random.hpp"

using namespace orthoboot;

TEST_CASE("derived streams depend only on seed and index") {
  RandomStream parent(42);
  const double before = parent.derive(3).uniform();
  parent.uniform();  // advancing the parent must not change its children
  CHECK(parent.derive(3).uniform() == before);
  CHECK(parent.derive(3).seed() != parent.derive(4).seed());
  CHECK(RandomStream(42).derive(3).seed() != RandomStream(43).derive(3).seed());
}

TEST_CASE("uniform_index rejects an empty range") {
  RandomStream rng(1);
  CHECK_THROWS_AS(rng.uniform_index(0), InvalidArgument);
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_index(7) < 7);
}

TEST_CASE("parallel_for visits every index once") {
  for (std::size_t threads : {1, 2, 5}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for rethrows the failure from the lowest index") {
  auto body = [](std::size_t i) {
    if (i == 11 || i == 40) throw std::runtime_error(std::to_string(i));
  };
  for (std::size_t threads : {1, 4}) {
    try {
      parallel_for(64, threads, body);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "11");
    }
  }
}
