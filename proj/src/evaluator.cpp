#include "mvreplay/evaluator.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "mvreplay/ncm.hpp"

namespace mvreplay {

namespace {

Eigen::MatrixXf normalize_rows(Eigen::MatrixXf m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const float norm = m.row(i).norm();
    if (norm > 0.0f) m.row(i) /= norm;
  }
  return m;
}

}  // namespace

EvaluationResult evaluate_final(const FeatureExtractor& extractor, const ReplayMemory& memory,
                                const std::vector<LabeledExample>& test_set,
                                const EvaluationOptions& options) {
  if (memory.size() == 0) throw std::invalid_argument("evaluate_final: empty memory");
  if (test_set.empty()) throw std::invalid_argument("evaluate_final: empty test set");

  const auto stored = memory.snapshot();
  std::vector<Image> memory_images;
  std::vector<int> memory_labels;
  memory_images.reserve(stored.size());
  memory_labels.reserve(stored.size());
  for (const auto& ex : stored) {
    memory_images.push_back(ex.image);
    memory_labels.push_back(ex.label.unseal());
  }

  Eigen::MatrixXf memory_reps = extractor.encode(memory_images);
  if (options.normalize_features) memory_reps = normalize_rows(std::move(memory_reps));
  const NCMClassifier classifier =
      NCMClassifier::fit(memory_reps, memory_labels, options.normalize_means);

  std::vector<Image> test_images;
  std::vector<int> test_labels;
  test_images.reserve(test_set.size());
  test_labels.reserve(test_set.size());
  for (const auto& ex : test_set) {
    test_images.push_back(ex.image);
    test_labels.push_back(ex.label.unseal());
  }

  Eigen::MatrixXf test_reps = extractor.encode(test_images);
  if (options.normalize_features) test_reps = normalize_rows(std::move(test_reps));
  const std::vector<int> predictions = classifier.predict(test_reps);

  EvaluationResult result;
  result.config_hash = options.config_hash;
  result.num_memory_examples_used = static_cast<int>(stored.size());
  result.ncm_normalize_means = options.normalize_means;
  result.ncm_normalize_features = options.normalize_features;
  result.final_average_accuracy = average_accuracy(predictions, test_labels);

  std::map<int, int> class_total, class_correct;
  for (std::size_t i = 0; i < test_labels.size(); ++i) {
    class_total[test_labels[i]] += 1;
    if (predictions[i] == test_labels[i]) class_correct[test_labels[i]] += 1;
  }
  for (const auto& [cls, total] : class_total) {
    result.per_class_accuracy[cls] = 100.0 * class_correct[cls] / static_cast<double>(total);
  }

  std::set<int> memory_classes(memory_labels.begin(), memory_labels.end());
  for (const auto& [cls, total] : class_total) {
    if (!memory_classes.count(cls)) result.classes_missing_from_memory.push_back(cls);
  }
  return result;
}

double average_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("average_accuracy: length mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("average_accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace mvreplay
