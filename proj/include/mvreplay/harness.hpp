#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mvreplay/evaluator.hpp"
#include "mvreplay/trainer.hpp"

namespace mvreplay {

// Full experiment description. Serializable to canonical JSON; the FNV-1a hash
// of that serialization is embedded in every output file.
struct RunConfig {
  std::string dataset = "cifar10";  // cifar10 | synthetic10 | imagedir
  std::string data_path;            // resolved against MVREPLAY_DATA_ROOT when empty
  int num_tasks = 5;
  int memory_capacity = 200;
  int stream_batch_size = 10;
  int mem_batch_size = 200;
  int mem_iters = 1;
  int views = 1;  // p: standard augmentations per source (raw view always added)
  int n_dam = 0;
  int n_dac = 0;
  int n_das = 0;
  double temperature = 0.07;
  double lr = 0.1;
  std::string loss_reduction = "mean_over_anchors";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "runs";
  bool desk_scale = false;
  int per_class_subsample = 500;  // train subsample per class when desk_scale
  std::string encoder;            // empty: resnet18, or small_cnn when desk_scale
  std::string style_model_path;
  bool style_fallback = false;
  bool ncm_normalize_means = false;
  bool ncm_normalize_features = false;
  bool save_checkpoints = true;
  bool reuse_existing = false;

  std::string resolved_encoder() const;
  TrainConfig train_config(std::uint64_t seed) const;
  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);  // rejects unknown keys
void apply_override(RunConfig& config, const std::string& key, const nlohmann::json& value);
std::string config_hash(const RunConfig& config);

struct SeedResult {
  std::uint64_t seed = 0;
  EvaluationResult evaluation;
  double wall_seconds = 0.0;
  double final_loss = 0.0;
  std::string checkpoint_file;
  std::string trace_file;
};

struct MetricsRecord {
  std::string hash;
  RunConfig config;
  std::vector<SeedResult> per_seed;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation over seeds
  double wall_seconds = 0.0;
  std::size_t encoder_parameters = 0;
  bool style_fallback_used = false;

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
};

double mean_of(const std::vector<double>& values);
double population_std(const std::vector<double>& values);

using LogFn = std::function<void(const std::string& line)>;

// Trains and evaluates one config across its seeds, persisting the record,
// loss traces and checkpoints under out_dir/<hash>/. With reuse_existing set,
// an already-persisted record for the same hash is returned instead of
// recomputing.
MetricsRecord run_experiment(const RunConfig& config, const LogFn& log = {});

// Cross-product sweep over named parameter lists (JSON values per key).
// Failing cells are reported and skipped; surviving records are returned and
// summarized in <out_dir>/sweep_summary.csv.
std::vector<MetricsRecord> run_sweep(const RunConfig& base,
                                     const std::map<std::string, std::vector<nlohmann::json>>& grid,
                                     const LogFn& log = {});

// Assembles a comparison table from every record below out_dir. Returns the
// text table; also writes <out_dir>/report.csv.
std::string assemble_report(const std::filesystem::path& out_dir);

// Checkpoint: architecture + parameter blob + final memory + config hash.
void save_checkpoint(const std::filesystem::path& file, const EncoderModel& model,
                     const ReplayMemory& memory, const std::string& hash);

struct Checkpoint {
  std::unique_ptr<EncoderModel> model;
  ReplayMemory memory{0};
  std::string hash;
};

Checkpoint load_checkpoint(const std::filesystem::path& file);

// Re-evaluates a stored checkpoint against the test split described by config.
EvaluationResult evaluate_checkpoint(const std::filesystem::path& file, const RunConfig& config);

// Dataset resolution (with on-demand synthetic generation and in-process
// caching shared across sweep cells).
std::filesystem::path dataset_root(const RunConfig& config);
std::shared_ptr<const std::vector<LabeledExample>> load_split(const RunConfig& config, Split split);

}  // namespace mvreplay
