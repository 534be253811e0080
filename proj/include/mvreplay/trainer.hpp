#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "mvreplay/augment.hpp"
#include "mvreplay/encoder.hpp"
#include "mvreplay/replay_memory.hpp"
#include "mvreplay/stream.hpp"

namespace mvreplay {

// How the many-view loss sum is scaled before the SGD step. The objective sum
// runs over all anchors; scaling by 1/|I| keeps the step size independent of
// the view count, which is what the default learning rate is calibrated for.
// The choice is recorded in every run config.
enum class LossReduction { sum, mean_over_anchors };

const char* loss_reduction_name(LossReduction r);
LossReduction loss_reduction_from_name(const std::string& name);

struct TrainConfig {
  int stream_batch_size = 10;
  int mem_batch_size = 200;  // |B_m|
  int mem_iters = 1;         // q
  AugmentationSpec aug;
  double temperature = 0.07;
  double lr = 0.1;
  LossReduction loss_reduction = LossReduction::mean_over_anchors;
  std::uint64_t seed = 1;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;        // value actually stepped on (after reduction)
  double loss_sum = 0.0;    // raw objective sum over anchors
  std::size_t memory_fill = 0;
  std::size_t views = 0;
  double millis = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Instrumented outcome of one online pass.
struct TrainStats {
  std::vector<StepRecord> log;
  int sgd_steps = 0;
  int memory_updates = 0;
  // Per example id: times offered to the reservoir (must be 1) and times its
  // stream batch entered a loss computation (must be q).
  std::unordered_map<std::int64_t, int> memory_offers;
  std::unordered_map<std::int64_t, int> stream_loss_uses;
};

// One full pass of the online loop: per stream batch, q iterations of
// (retrieve, combine, many-view, SGD), then exactly one reservoir update with
// that stream batch. The training path never reads labels.
TrainStats train_online(StreamBatches& stream, const TrainConfig& config, EncoderModel& model,
                        ReplayMemory& memory, const StyleModel* style = nullptr,
                        const StepCallback& on_step = {});

}  // namespace mvreplay
