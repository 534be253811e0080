#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

namespace mvreplay {

// Nearest class mean over representation rows. Prediction is the argmin of
// Euclidean distance to the class means; ties resolve to the lowest class id.
class NCMClassifier {
 public:
  static NCMClassifier fit(const Eigen::MatrixXf& representations, const std::vector<int>& labels,
                           bool normalize_means = false);

  int predict_one(const Eigen::RowVectorXf& representation) const;
  std::vector<int> predict(const Eigen::MatrixXf& representations) const;

  // Means are kept in double so they agree with an independent accumulation
  // pass to near machine precision regardless of fitting order.
  const std::map<int, Eigen::RowVectorXd>& class_means() const { return means_; }
  bool fitted() const { return !means_.empty(); }

 private:
  std::map<int, Eigen::RowVectorXd> means_;
};

}  // namespace mvreplay
