#pragma once

#include <cstdint>
#include <vector>

#include "mvreplay/augment.hpp"
#include "mvreplay/dataset.hpp"
#include "mvreplay/stream.hpp"

namespace mvreplay {

// Augmented views of a combined batch, one block of views per source image in
// a fixed order: raw, standard x p, dam, dac, das. Every view carries the id
// of the source it was built from; domain donors never contribute their id.
struct ManyViewBatch {
  std::vector<Image> images;
  std::vector<std::int64_t> source_ids;
  std::vector<ViewKind> view_kinds;

  std::size_t size() const { return images.size(); }
};

ManyViewBatch build_many_view_batch(const std::vector<LabeledExample>& combined,
                                    const AugmentationSpec& spec, const StreamBatch& stream_batch,
                                    Rng& rng, const StyleModel* style);

// P(i) = { j != i : source_ids[j] == source_ids[i] }. Every id must appear at
// least twice, otherwise 1/|P(i)| in the loss would be undefined.
std::vector<std::vector<int>> positive_sets(const std::vector<std::int64_t>& source_ids);

}  // namespace mvreplay
