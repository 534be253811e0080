#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "mvreplay/dataset.hpp"
#include "mvreplay/rng.hpp"
#include "mvreplay/stream.hpp"

namespace mvreplay {

struct MemoryBatch {
  std::vector<LabeledExample> examples;
};

// Fixed-capacity reservoir over the stream. After n >= capacity offers, every
// offered item is resident with probability capacity/n. Single writer; reads
// must not interleave with an in-progress update.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {}

  // Classic reservoir step. Each item consumes RNG draws in a fixed order:
  // one uniform for the acceptance test, then (only if accepted and the
  // reservoir is full) one uniform for the victim slot.
  void offer(const LabeledExample& example, Rng& rng);
  void offer_batch(const StreamBatch& batch, Rng& rng);  // stream order

  // Uniform sample without replacement of min(n, size()) stored examples.
  MemoryBatch retrieve(std::size_t n, Rng& rng) const;

  // Read-only copy of every slot; labels become readable through unseal().
  std::vector<LabeledExample> snapshot() const { return slots_; }

  // Rebuilds a memory from checkpointed slots.
  static ReplayMemory restore(std::size_t capacity, std::vector<LabeledExample> slots,
                              std::uint64_t seen);

  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t seen_count() const { return seen_; }

 private:
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<LabeledExample> slots_;
  std::unordered_set<std::int64_t> offered_ids_;
};

}  // namespace mvreplay
