#include "mvreplay/replay_memory.hpp"

#include <stdexcept>

namespace mvreplay {

void ReplayMemory::offer(const LabeledExample& example, Rng& rng) {
  if (!offered_ids_.insert(example.id).second) {
    throw std::invalid_argument("memory_update: example id " + std::to_string(example.id) +
                                " offered twice");
  }
  ++seen_;
  if (capacity_ == 0) return;
  if (slots_.size() < capacity_) {
    slots_.push_back(example);
    return;
  }
  const double accept = rng.uniform();
  if (accept < static_cast<double>(capacity_) / static_cast<double>(seen_)) {
    const std::size_t victim = static_cast<std::size_t>(rng.uniform_int(capacity_));
    slots_[victim] = example;
  }
}

void ReplayMemory::offer_batch(const StreamBatch& batch, Rng& rng) {
  for (const auto& ex : batch.examples) offer(ex, rng);
}

ReplayMemory ReplayMemory::restore(std::size_t capacity, std::vector<LabeledExample> slots,
                                   std::uint64_t seen) {
  if (slots.size() > capacity) {
    throw std::invalid_argument("memory restore: more slots than capacity");
  }
  ReplayMemory memory(capacity);
  memory.seen_ = seen;
  for (const auto& ex : slots) memory.offered_ids_.insert(ex.id);
  memory.slots_ = std::move(slots);
  return memory;
}

MemoryBatch ReplayMemory::retrieve(std::size_t n, Rng& rng) const {
  MemoryBatch out;
  const std::size_t take = std::min(n, slots_.size());
  if (take == 0) return out;
  // Partial Fisher-Yates over slot indices.
  std::vector<std::size_t> idx(slots_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  out.examples.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.examples.push_back(slots_[idx[i]]);
  }
  return out;
}

}  // namespace mvreplay
