#include "mvreplay/ncm.hpp"

#include <cmath>
#include <stdexcept>

namespace mvreplay {

NCMClassifier NCMClassifier::fit(const Eigen::MatrixXf& representations,
                                 const std::vector<int>& labels, bool normalize_means) {
  if (representations.rows() == 0) throw std::invalid_argument("ncm_fit: empty input");
  if (static_cast<std::size_t>(representations.rows()) != labels.size()) {
    throw std::invalid_argument("ncm_fit: representations/labels size mismatch");
  }
  // Accumulate in double: the fitted means must be order-independent to
  // near machine precision.
  std::map<int, Eigen::RowVectorXd> sums;
  std::map<int, std::int64_t> counts;
  for (Eigen::Index i = 0; i < representations.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    auto [it, inserted] = sums.try_emplace(label, Eigen::RowVectorXd::Zero(representations.cols()));
    it->second += representations.row(i).cast<double>();
    counts[label] += 1;
  }
  NCMClassifier clf;
  for (auto& [label, sum] : sums) {
    Eigen::RowVectorXd mean = sum / static_cast<double>(counts[label]);
    if (!mean.allFinite()) throw std::runtime_error("ncm_fit: non-finite class mean");
    if (normalize_means) {
      const double norm = mean.norm();
      if (norm > 0.0) mean /= norm;
    }
    clf.means_[label] = std::move(mean);
  }
  return clf;
}

int NCMClassifier::predict_one(const Eigen::RowVectorXf& representation) const {
  if (means_.empty()) throw std::logic_error("ncm_predict: classifier not fitted");
  const Eigen::RowVectorXd query = representation.cast<double>();
  int best_label = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  for (const auto& [label, mean] : means_) {
    const double d = (query - mean).squaredNorm();
    if (d < best_sq) {  // map iterates in ascending label order: ties keep the lower id
      best_sq = d;
      best_label = label;
    }
  }
  return best_label;
}

std::vector<int> NCMClassifier::predict(const Eigen::MatrixXf& representations) const {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(representations.rows()));
  for (Eigen::Index i = 0; i < representations.rows(); ++i) {
    labels.push_back(predict_one(representations.row(i)));
  }
  return labels;
}

}  // namespace mvreplay
