#include "mvreplay/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "mvreplay/many_view.hpp"

namespace mvreplay {

MvContResult mvcont_loss(const Eigen::MatrixXd& embeddings,
                         const std::vector<std::int64_t>& source_ids, double tau,
                         double norm_tolerance) {
  const auto n = embeddings.rows();
  if (n == 0) throw std::invalid_argument("mvcont_loss: empty batch");
  if (static_cast<std::size_t>(n) != source_ids.size()) {
    throw std::invalid_argument("mvcont_loss: embeddings/source_ids size mismatch");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("mvcont_loss: tau must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embeddings.row(i).norm();
    if (std::abs(norm - 1.0) > norm_tolerance) {
      throw std::invalid_argument("mvcont_loss: embedding " + std::to_string(i) +
                                  " is not unit-norm (|.| = " + std::to_string(norm) + ")");
    }
  }

  const auto positives = positive_sets(source_ids);

  const Eigen::MatrixXd sim = embeddings * embeddings.transpose();

  // Row-wise softmax over a != i with max-shifted logits, plus the loss value.
  Eigen::MatrixXd grad_sim = Eigen::MatrixXd::Zero(n, n);
  double loss = 0.0;
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      max_logit = std::max(max_logit, sim(i, a) / tau);
    }
    double denom = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      const double e = std::exp(sim(i, a) / tau - max_logit);
      row(a) = e;
      denom += e;
    }
    const double log_denom = std::log(denom) + max_logit;

    const auto& pos = positives[static_cast<std::size_t>(i)];
    const double inv_p = 1.0 / static_cast<double>(pos.size());
    for (int p : pos) {
      loss -= inv_p * (sim(i, p) / tau - log_denom);
      grad_sim(i, p) -= inv_p / tau;
    }
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      grad_sim(i, a) += row(a) / denom / tau;
    }
  }

  MvContResult result;
  result.value = loss;
  // sim(i,a) = z_i . z_a feeds both the (i,a) and (a,i) loss terms.
  result.grad = (grad_sim + grad_sim.transpose()) * embeddings;
  return result;
}

}  // namespace mvreplay
