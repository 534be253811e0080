#include "mvreplay/stream.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mvreplay/rng.hpp"

namespace mvreplay {

TaskSequence build_task_sequence(const std::vector<LabeledExample>& examples, int num_tasks,
                                 std::uint64_t seed) {
  if (num_tasks <= 0) throw std::invalid_argument("build_task_sequence: num_tasks must be >= 1");
  if (examples.empty()) throw std::invalid_argument("build_task_sequence: empty dataset");

  std::map<int, std::vector<std::int64_t>> by_class;
  for (const auto& ex : examples) by_class[ex.label.unseal()].push_back(ex.id);

  const int num_classes = static_cast<int>(by_class.size());
  if (num_classes % num_tasks != 0) {
    throw std::invalid_argument("build_task_sequence: " + std::to_string(num_classes) +
                                " classes not divisible by " + std::to_string(num_tasks) +
                                " tasks");
  }
  const int classes_per_task = num_classes / num_tasks;

  std::vector<int> class_order;
  class_order.reserve(by_class.size());
  for (const auto& [cls, ids] : by_class) class_order.push_back(cls);
  Rng class_rng = Rng::substream(seed, "class_order");
  for (std::size_t i = class_order.size(); i > 1; --i) {
    std::swap(class_order[i - 1], class_order[class_rng.uniform_int(i)]);
  }

  TaskSequence seq;
  seq.num_tasks = num_tasks;
  seq.classes_per_task = classes_per_task;
  seq.tasks.resize(num_tasks);
  seq.task_classes.resize(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    auto& ids = seq.tasks[t];
    for (int j = 0; j < classes_per_task; ++j) {
      const int cls = class_order[static_cast<std::size_t>(t) * classes_per_task + j];
      seq.task_classes[t].push_back(cls);
      const auto& cls_ids = by_class[cls];
      ids.insert(ids.end(), cls_ids.begin(), cls_ids.end());
    }
    Rng task_rng = Rng::substream(seed, "task_order", static_cast<std::uint64_t>(t));
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[task_rng.uniform_int(i)]);
    }
  }
  return seq;
}

StreamBatches::StreamBatches(std::shared_ptr<const std::vector<LabeledExample>> dataset,
                             TaskSequence sequence, int batch_size)
    : dataset_(std::move(dataset)), sequence_(std::move(sequence)), batch_size_(batch_size) {
  if (batch_size_ < 1) throw std::invalid_argument("stream batch_size must be >= 1");
  if (!dataset_) throw std::invalid_argument("stream requires a dataset");

  std::unordered_map<std::int64_t, std::size_t> lookup;
  lookup.reserve(dataset_->size());
  for (std::size_t i = 0; i < dataset_->size(); ++i) lookup[(*dataset_)[i].id] = i;

  for (const auto& task : sequence_.tasks) {
    total_ += task.size();
    for (std::int64_t id : task) {
      auto it = lookup.find(id);
      if (it == lookup.end()) {
        throw std::invalid_argument("task sequence references unknown example id " +
                                    std::to_string(id));
      }
      id_to_index_.push_back(it->second);
    }
  }
}

std::optional<StreamBatch> StreamBatches::next() {
  // Skip any empty tasks.
  while (task_ < sequence_.tasks.size() && offset_ >= sequence_.tasks[task_].size()) {
    ++task_;
    offset_ = 0;
  }
  if (task_ >= sequence_.tasks.size()) return std::nullopt;

  const auto& task_ids = sequence_.tasks[task_];
  const std::size_t take = std::min<std::size_t>(batch_size_, task_ids.size() - offset_);

  std::size_t flat_base = 0;
  for (std::size_t t = 0; t < task_; ++t) flat_base += sequence_.tasks[t].size();

  StreamBatch batch;
  batch.task_index = static_cast<int>(task_);
  batch.examples.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    batch.examples.push_back((*dataset_)[id_to_index_[flat_base + offset_ + i]]);
  }
  offset_ += take;
  return batch;
}

void StreamBatches::reset() {
  task_ = 0;
  offset_ = 0;
}

}  // namespace mvreplay
