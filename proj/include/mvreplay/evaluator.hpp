#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvreplay/dataset.hpp"
#include "mvreplay/encoder.hpp"
#include "mvreplay/replay_memory.hpp"

namespace mvreplay {

struct EvaluationResult {
  double final_average_accuracy = 0.0;             // percent
  std::map<int, double> per_class_accuracy;        // percent, over test classes
  int num_memory_examples_used = 0;
  std::string config_hash;
  // Test classes with no memory examples; the classifier cannot predict these
  // and their test items count as errors.
  std::vector<int> classes_missing_from_memory;
  bool ncm_normalize_means = false;
  bool ncm_normalize_features = false;
};

struct EvaluationOptions {
  bool normalize_means = false;
  bool normalize_features = false;
  std::string config_hash;
};

// Final-accuracy protocol: label the final memory, fit NCM on extractor
// representations of the memory images, classify extractor representations of
// the test set. Only memory images ever train the classifier; projections are
// never used.
EvaluationResult evaluate_final(const FeatureExtractor& extractor, const ReplayMemory& memory,
                                const std::vector<LabeledExample>& test_set,
                                const EvaluationOptions& options = {});

// 100 * correct / total over aligned prediction/label sequences.
double average_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace mvreplay
