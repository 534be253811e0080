#include "mvreplay/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mvreplay/loss.hpp"
#include "mvreplay/many_view.hpp"

namespace mvreplay {

const char* loss_reduction_name(LossReduction r) {
  return r == LossReduction::sum ? "sum" : "mean_over_anchors";
}

LossReduction loss_reduction_from_name(const std::string& name) {
  if (name == "sum") return LossReduction::sum;
  if (name == "mean_over_anchors") return LossReduction::mean_over_anchors;
  throw std::invalid_argument("unknown loss reduction: " + name);
}

void TrainConfig::validate() const {
  if (stream_batch_size < 1) throw std::invalid_argument("stream_batch_size must be >= 1");
  if (mem_batch_size < 0) throw std::invalid_argument("mem_batch_size must be >= 0");
  if (mem_iters < 1) throw std::invalid_argument("mem_iters (q) must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (aug.views_per_source() < 2) {
    throw std::invalid_argument("augmentation spec must yield >= 2 views per source");
  }
  if (aug.n_standard < 0 || aug.n_dam < 0 || aug.n_dac < 0 || aug.n_das < 0) {
    throw std::invalid_argument("augmentation counts must be >= 0");
  }
}

TrainStats train_online(StreamBatches& stream, const TrainConfig& config, EncoderModel& model,
                        ReplayMemory& memory, const StyleModel* style,
                        const StepCallback& on_step) {
  config.validate();
  if (config.aug.n_das > 0 && style == nullptr) {
    throw std::invalid_argument("train_online: das views configured without a style model");
  }

  Rng reservoir_rng = Rng::substream(config.seed, "reservoir");
  Rng retrieval_rng = Rng::substream(config.seed, "retrieval");
  Rng augment_rng = Rng::substream(config.seed, "augmentation");

  TrainStats stats;
  int step = 0;
  while (auto batch = stream.next()) {
    const StreamBatch& stream_batch = *batch;
    for (int iter = 0; iter < config.mem_iters; ++iter) {
      const auto started = std::chrono::steady_clock::now();

      MemoryBatch memory_batch =
          memory.retrieve(static_cast<std::size_t>(config.mem_batch_size), retrieval_rng);
      std::vector<LabeledExample> combined = stream_batch.examples;
      combined.insert(combined.end(), memory_batch.examples.begin(), memory_batch.examples.end());

      const ManyViewBatch views =
          build_many_view_batch(combined, config.aug, stream_batch, augment_rng, style);

      const Eigen::MatrixXf embeddings = model.forward_train(views.images);
      const MvContResult loss =
          mvcont_loss(embeddings.cast<double>(), views.source_ids, config.temperature);

      const double scale = config.loss_reduction == LossReduction::mean_over_anchors
                               ? 1.0 / static_cast<double>(views.size())
                               : 1.0;
      const double stepped_loss = loss.value * scale;
      if (!std::isfinite(stepped_loss)) {
        throw std::runtime_error("non-finite training loss at step " + std::to_string(step) +
                                 " (raw sum " + std::to_string(loss.value) + ")");
      }

      model.backward((loss.grad * scale).cast<float>());
      model.sgd_step(static_cast<float>(config.lr));

      for (const auto& ex : stream_batch.examples) stats.stream_loss_uses[ex.id] += 1;
      ++stats.sgd_steps;
      ++step;

      StepRecord record;
      record.step = step;
      record.loss = stepped_loss;
      record.loss_sum = loss.value;
      record.memory_fill = memory.size();
      record.views = views.size();
      record.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                started)
                          .count();
      if (on_step) on_step(record);
      stats.log.push_back(std::move(record));
    }

    // Memory update strictly follows the q iterations for this batch.
    memory.offer_batch(stream_batch, reservoir_rng);
    for (const auto& ex : stream_batch.examples) stats.memory_offers[ex.id] += 1;
    ++stats.memory_updates;
  }
  return stats;
}

}  // namespace mvreplay
