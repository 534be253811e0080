#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace mvreplay {

// Multi-view contrastive objective over a many-view batch: every pair of views
// sharing a source id is a positive, everything else a negative. For unit
// embeddings z (one row per view),
//
//   L = -sum_i 1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p / tau)
//                                            / sum_{a != i} exp(z_i.z_a / tau) )
//
// The gradient is the exact derivative of this expression with respect to the
// embedding rows. Per-anchor logits are max-shifted before exponentiation, so
// the value stays finite for any unit-norm input and tau >= 1e-3.
struct MvContResult {
  double value = 0.0;
  Eigen::MatrixXd grad;  // same shape as the embeddings
};

MvContResult mvcont_loss(const Eigen::MatrixXd& embeddings,
                         const std::vector<std::int64_t>& source_ids, double tau,
                         double norm_tolerance = 1e-4);

}  // namespace mvreplay
