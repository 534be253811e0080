#include "mvreplay/many_view.hpp"

#include <stdexcept>
#include <unordered_map>

namespace mvreplay {

ManyViewBatch build_many_view_batch(const std::vector<LabeledExample>& combined,
                                    const AugmentationSpec& spec, const StreamBatch& stream_batch,
                                    Rng& rng, const StyleModel* style) {
  if (combined.empty()) throw std::invalid_argument("build_many_view_batch: empty batch");
  if (spec.views_per_source() < 2) {
    throw std::invalid_argument("build_many_view_batch: need at least 2 views per source");
  }
  if (spec.daa_views() > 0 && stream_batch.examples.empty()) {
    throw std::invalid_argument("build_many_view_batch: domain-aware views need a stream batch");
  }
  if (spec.n_das > 0 && style == nullptr) {
    throw std::invalid_argument("build_many_view_batch: das views need a style model");
  }

  const int v = spec.views_per_source();
  ManyViewBatch batch;
  batch.images.reserve(combined.size() * static_cast<std::size_t>(v));
  batch.source_ids.reserve(batch.images.capacity());
  batch.view_kinds.reserve(batch.images.capacity());

  auto emit = [&](const LabeledExample& src, ViewKind kind) {
    batch.images.push_back(build_view(src.image, kind, stream_batch, rng, spec.standard, style));
    batch.source_ids.push_back(src.id);
    batch.view_kinds.push_back(kind);
  };

  for (const auto& src : combined) {
    emit(src, ViewKind::raw);
    for (int i = 0; i < spec.n_standard; ++i) emit(src, ViewKind::standard);
    for (int i = 0; i < spec.n_dam; ++i) emit(src, ViewKind::dam);
    for (int i = 0; i < spec.n_dac; ++i) emit(src, ViewKind::dac);
    for (int i = 0; i < spec.n_das; ++i) emit(src, ViewKind::das);
  }
  return batch;
}

std::vector<std::vector<int>> positive_sets(const std::vector<std::int64_t>& source_ids) {
  const int n = static_cast<int>(source_ids.size());
  std::unordered_map<std::int64_t, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[source_ids[i]].push_back(i);
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) {
      throw std::invalid_argument("positive_sets: source id " + std::to_string(id) +
                                  " has a single view");
    }
  }
  std::vector<std::vector<int>> positives(static_cast<std::size_t>(n));
  for (const auto& [id, members] : groups) {
    for (int i : members) {
      auto& p = positives[static_cast<std::size_t>(i)];
      p.reserve(members.size() - 1);
      for (int j : members) {
        if (j != i) p.push_back(j);
      }
    }
  }
  return positives;
}

}  // namespace mvreplay
