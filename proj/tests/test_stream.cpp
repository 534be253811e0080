#include <doctest.h>

#include <map>
#include <set>

#include "mvreplay/stream.hpp"
#include "testutil.hpp"

using namespace mvreplay;

TEST_SUITE_BEGIN("stream");

namespace {

std::map<int, std::set<int>> task_class_sets(const std::vector<LabeledExample>& data,
                                             const TaskSequence& seq) {
  std::map<std::int64_t, int> label_of;
  for (const auto& ex : data) label_of[ex.id] = ex.label.unseal();
  std::map<int, std::set<int>> out;
  for (int t = 0; t < seq.num_tasks; ++t) {
    for (auto id : seq.tasks[static_cast<std::size_t>(t)]) out[t].insert(label_of[id]);
  }
  return out;
}

}  // namespace

TEST_CASE("10 classes over 5 tasks gives 2 classes per task, disjoint") {
  const auto data = testutil::toy_dataset(10, 6, 8, 2);
  const auto seq = build_task_sequence(data, 5, 31);
  CHECK(seq.num_tasks == 5);
  CHECK(seq.classes_per_task == 2);

  const auto sets = task_class_sets(data, seq);
  std::set<int> all;
  for (const auto& [t, classes] : sets) {
    CHECK(classes.size() == 2);
    for (int c : classes) {
      CHECK(!all.count(c));
      all.insert(c);
    }
  }
  CHECK(all.size() == 10);
}

TEST_CASE("indivisible class count errors") {
  const auto data = testutil::toy_dataset(10, 2, 8, 2);
  CHECK_THROWS_AS(build_task_sequence(data, 3, 1), std::invalid_argument);
}

TEST_CASE("class order depends on the seed, and sequences are deterministic") {
  const auto data = testutil::toy_dataset(10, 4, 8, 2);
  const auto a1 = build_task_sequence(data, 5, 1);
  const auto a2 = build_task_sequence(data, 5, 1);
  CHECK(a1.tasks == a2.tasks);

  bool any_difference = false;
  for (std::uint64_t seed = 2; seed < 6 && !any_difference; ++seed) {
    any_difference = build_task_sequence(data, 5, seed).tasks != a1.tasks;
  }
  CHECK(any_difference);
}

TEST_CASE("one pass: every id exactly once, in task order") {
  const auto data = testutil::toy_dataset(4, 25, 8, 3);  // 100 examples
  auto shared = std::make_shared<const std::vector<LabeledExample>>(data);
  const auto seq = build_task_sequence(data, 2, 7);
  StreamBatches stream(shared, seq, 10);

  std::multiset<std::int64_t> seen;
  int batches = 0;
  int last_task = 0;
  while (auto batch = stream.next()) {
    ++batches;
    CHECK(batch->task_index >= last_task);  // task by task
    last_task = batch->task_index;
    for (const auto& ex : batch->examples) seen.insert(ex.id);
  }
  CHECK(batches == 10);
  std::multiset<std::int64_t> expected;
  for (const auto& ex : data) expected.insert(ex.id);
  CHECK(seen == expected);
}

TEST_CASE("task remainders stay short instead of mixing tasks") {
  // 2 tasks x 105 examples with batch 10: each task ends with a 5-batch.
  const auto data = testutil::toy_dataset(2, 105, 8, 4);
  auto shared = std::make_shared<const std::vector<LabeledExample>>(data);
  StreamBatches stream(shared, build_task_sequence(data, 2, 5), 10);

  std::vector<std::pair<int, std::size_t>> sizes;  // (task, batch size)
  while (auto batch = stream.next()) sizes.emplace_back(batch->task_index, batch->examples.size());
  REQUIRE(sizes.size() == 22);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const bool task_end = (i == 10) || (i == 21);
    CHECK(sizes[i].second == (task_end ? 5u : 10u));
  }
}

TEST_CASE("identical inputs give identical batch sequences") {
  const auto data = testutil::toy_dataset(4, 10, 8, 5);
  auto shared = std::make_shared<const std::vector<LabeledExample>>(data);
  const auto seq = build_task_sequence(data, 2, 11);
  StreamBatches s1(shared, seq, 7);
  StreamBatches s2(shared, seq, 7);
  while (true) {
    auto a = s1.next();
    auto b = s2.next();
    REQUIRE(a.has_value() == b.has_value());
    if (!a) break;
    REQUIRE(a->examples.size() == b->examples.size());
    for (std::size_t i = 0; i < a->examples.size(); ++i) {
      CHECK(a->examples[i].id == b->examples[i].id);
    }
  }
}

TEST_CASE("reset replays the same pass") {
  const auto data = testutil::toy_dataset(2, 10, 8, 6);
  auto shared = std::make_shared<const std::vector<LabeledExample>>(data);
  StreamBatches stream(shared, build_task_sequence(data, 2, 3), 4);
  std::vector<std::int64_t> first;
  while (auto b = stream.next()) {
    for (const auto& ex : b->examples) first.push_back(ex.id);
  }
  stream.reset();
  std::vector<std::int64_t> second;
  while (auto b = stream.next()) {
    for (const auto& ex : b->examples) second.push_back(ex.id);
  }
  CHECK(first == second);
}

TEST_SUITE_END();
