#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mvreplay/dataset.hpp"

namespace mvreplay {

// Class-incremental task layout over a dataset: classes are partitioned into
// num_tasks disjoint groups in seed-determined random order, and within-task
// example order is a seeded shuffle.
struct TaskSequence {
  std::vector<std::vector<std::int64_t>> tasks;  // example ids, stream order
  std::vector<std::vector<int>> task_classes;    // metadata, never shown to the learner
  int classes_per_task = 0;
  int num_tasks = 0;
};

struct StreamBatch {
  std::vector<LabeledExample> examples;
  int task_index = 0;  // metadata only
};

TaskSequence build_task_sequence(const std::vector<LabeledExample>& examples, int num_tasks,
                                 std::uint64_t seed);

// Single-consumer, one-pass iterator over the stream. Batches are drawn
// in-order from one task; the last batch of a task may be short rather than
// mixing examples across the task boundary.
class StreamBatches {
 public:
  StreamBatches(std::shared_ptr<const std::vector<LabeledExample>> dataset, TaskSequence sequence,
                int batch_size);

  std::optional<StreamBatch> next();
  void reset();

  std::size_t total_examples() const { return total_; }
  int batch_size() const { return batch_size_; }

 private:
  std::shared_ptr<const std::vector<LabeledExample>> dataset_;
  TaskSequence sequence_;
  std::vector<std::size_t> id_to_index_;
  int batch_size_;
  std::size_t total_ = 0;
  std::size_t task_ = 0;
  std::size_t offset_ = 0;
};

}  // namespace mvreplay
