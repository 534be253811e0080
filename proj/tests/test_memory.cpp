#include <doctest.h>

#include <set>

#include "mvreplay/replay_memory.hpp"
#include "testutil.hpp"

using namespace mvreplay;

TEST_SUITE_BEGIN("memory");

namespace {

LabeledExample tiny_example(std::int64_t id, int label = 0) {
  LabeledExample ex;
  ex.id = id;
  ex.label = HiddenLabel(label);
  ex.image = Image(2, 2, 3, static_cast<float>(id % 7) / 7.0f);
  return ex;
}

}  // namespace

TEST_CASE("under capacity everything is stored") {
  ReplayMemory memory(200);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) memory.offer(tiny_example(i), rng);
  CHECK(memory.size() == 50);
  CHECK(memory.seen_count() == 50);
  std::set<std::int64_t> ids;
  for (const auto& ex : memory.snapshot()) ids.insert(ex.id);
  CHECK(ids.size() == 50);
}

TEST_CASE("capacity zero stays empty") {
  ReplayMemory memory(0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) memory.offer(tiny_example(i), rng);
  CHECK(memory.size() == 0);
  CHECK(memory.seen_count() == 100);
  CHECK(memory.retrieve(10, rng).examples.empty());
}

TEST_CASE("capacity bound holds while streaming") {
  ReplayMemory memory(16);
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    memory.offer(tiny_example(i), rng);
    REQUIRE(memory.size() <= 16);
  }
  CHECK(memory.size() == 16);
}

TEST_CASE("re-offering an id is rejected") {
  ReplayMemory memory(4);
  Rng rng(3);
  memory.offer(tiny_example(5), rng);
  CHECK_THROWS_AS(memory.offer(tiny_example(5), rng), std::invalid_argument);
}

TEST_CASE("reservoir inclusion frequencies are uniform (small Monte Carlo)") {
  // Acceptance criterion 5 runs the full-size version of this check.
  const int m = 10, n = 200, trials = 2000;
  std::vector<int> inclusion(n, 0);
  for (int t = 0; t < trials; ++t) {
    ReplayMemory memory(m);
    Rng rng = Rng::substream(900, "resunit", static_cast<std::uint64_t>(t));
    for (int i = 0; i < n; ++i) memory.offer(tiny_example(i), rng);
    for (const auto& ex : memory.snapshot()) inclusion[static_cast<std::size_t>(ex.id)] += 1;
  }
  const double p = static_cast<double>(m) / n;
  const double se = std::sqrt(p * (1.0 - p) / trials);
  int outliers = 0;
  for (int c : inclusion) {
    if (std::abs(c / static_cast<double>(trials) - p) > 4.0 * se) ++outliers;
  }
  CHECK(outliers == 0);
}

TEST_CASE("retrieve clamps to available and draws without replacement") {
  ReplayMemory memory(200);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) memory.offer(tiny_example(i), rng);

  const auto batch = memory.retrieve(200, rng);
  CHECK(batch.examples.size() == 50);
  std::set<std::int64_t> ids;
  for (const auto& ex : batch.examples) ids.insert(ex.id);
  CHECK(ids.size() == 50);  // no duplicates

  const auto small = memory.retrieve(20, rng);
  CHECK(small.examples.size() == 20);
  std::set<std::int64_t> small_ids;
  for (const auto& ex : small.examples) small_ids.insert(ex.id);
  CHECK(small_ids.size() == 20);
}

TEST_CASE("full draw returns all slots in random order") {
  ReplayMemory memory(32);
  Rng rng(5);
  for (int i = 0; i < 32; ++i) memory.offer(tiny_example(i), rng);
  const auto batch = memory.retrieve(32, rng);
  REQUIRE(batch.examples.size() == 32);
  std::set<std::int64_t> ids;
  bool permuted = false;
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    ids.insert(batch.examples[i].id);
    permuted |= batch.examples[i].id != static_cast<std::int64_t>(i);
  }
  CHECK(ids.size() == 32);
  CHECK(permuted);
}

TEST_CASE("retrieval is uniform across slots") {
  ReplayMemory memory(20);
  Rng rng(6);
  for (int i = 0; i < 20; ++i) memory.offer(tiny_example(i), rng);
  std::vector<int> counts(20, 0);
  const int draws = 20000;
  Rng retrieval(7);
  for (int t = 0; t < draws; ++t) {
    for (const auto& ex : memory.retrieve(5, retrieval).examples) {
      counts[static_cast<std::size_t>(ex.id)] += 1;
    }
  }
  const double p = 5.0 / 20.0;
  const double se = std::sqrt(p * (1.0 - p) / draws);
  for (int c : counts) {
    CHECK(std::abs(c / static_cast<double>(draws) - p) <= 4.0 * se);
  }
}

TEST_CASE("snapshot is read-only and repeatable") {
  ReplayMemory memory(8);
  Rng rng(8);
  for (int i = 0; i < 30; ++i) memory.offer(tiny_example(i, i % 3), rng);
  const auto a = memory.snapshot();
  const auto b = memory.snapshot();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].label.unseal() == b[i].label.unseal());
  }
  CHECK(memory.size() == 8);
}

TEST_CASE("identical seeds give identical states") {
  auto run = [](std::uint64_t seed) {
    ReplayMemory memory(8);
    Rng rng(seed);
    for (int i = 0; i < 100; ++i) memory.offer(tiny_example(i), rng);
    std::vector<std::int64_t> ids;
    for (const auto& ex : memory.snapshot()) ids.push_back(ex.id);
    return ids;
  };
  CHECK(run(9) == run(9));
  CHECK(run(9) != run(10));
}

TEST_CASE("restore rebuilds slots and rejects oversize") {
  std::vector<LabeledExample> slots;
  for (int i = 0; i < 4; ++i) slots.push_back(tiny_example(i));
  auto memory = ReplayMemory::restore(8, slots, 40);
  CHECK(memory.size() == 4);
  CHECK(memory.seen_count() == 40);
  CHECK_THROWS_AS(ReplayMemory::restore(2, slots, 4), std::invalid_argument);
}

TEST_SUITE_END();
