#include "mvreplay/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mvreplay/synthetic.hpp"

namespace mvreplay {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4d56434b;  // "MVCK"
constexpr std::uint32_t kCheckpointVersion = 1;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << h;
  return out.str();
}

// Atomic file replacement: write a sibling temp file, then rename.
void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint stream");
  return v;
}

struct DatasetCache {
  std::mutex mutex;
  std::unordered_map<std::string, std::shared_ptr<const std::vector<LabeledExample>>> entries;
};

DatasetCache& dataset_cache() {
  static DatasetCache cache;
  return cache;
}

std::optional<StyleModel> make_style_model(const RunConfig& config) {
  if (config.n_das <= 0) return std::nullopt;
  if (!config.style_model_path.empty()) return StyleModel::load(config.style_model_path);
  if (config.style_fallback) return StyleModel::fallback();
  throw std::invalid_argument(
      "das views configured: provide style_model_path or enable style_fallback");
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string RunConfig::resolved_encoder() const {
  if (!encoder.empty()) return encoder;
  return desk_scale ? "small_cnn" : "resnet18";
}

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
  TrainConfig tc;
  tc.stream_batch_size = stream_batch_size;
  tc.mem_batch_size = mem_batch_size;
  tc.mem_iters = mem_iters;
  tc.aug.n_standard = views;
  tc.aug.n_dam = n_dam;
  tc.aug.n_dac = n_dac;
  tc.aug.n_das = n_das;
  tc.temperature = temperature;
  tc.lr = lr;
  tc.loss_reduction = loss_reduction_from_name(loss_reduction);
  tc.seed = seed;
  return tc;
}

void RunConfig::validate() const {
  if (dataset != "cifar10" && dataset != "synthetic10" && dataset != "imagedir") {
    throw std::invalid_argument("unknown dataset: " + dataset);
  }
  if (dataset == "imagedir" && data_path.empty()) {
    throw std::invalid_argument("imagedir dataset requires data_path");
  }
  if (num_tasks < 1) throw std::invalid_argument("num_tasks must be >= 1");
  if (memory_capacity < 0) throw std::invalid_argument("memory_capacity must be >= 0");
  if (views < 0) throw std::invalid_argument("views must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (per_class_subsample < 1) throw std::invalid_argument("per_class_subsample must be >= 1");
  encoder_arch_from_name(resolved_encoder());
  train_config(seeds.front()).validate();  // range checks shared with the trainer
}

json run_config_to_json(const RunConfig& c) {
  return json{{"dataset", c.dataset},
              {"data_path", c.data_path},
              {"num_tasks", c.num_tasks},
              {"memory_capacity", c.memory_capacity},
              {"stream_batch_size", c.stream_batch_size},
              {"mem_batch_size", c.mem_batch_size},
              {"mem_iters", c.mem_iters},
              {"views", c.views},
              {"n_dam", c.n_dam},
              {"n_dac", c.n_dac},
              {"n_das", c.n_das},
              {"temperature", c.temperature},
              {"lr", c.lr},
              {"loss_reduction", c.loss_reduction},
              {"seeds", c.seeds},
              {"out_dir", c.out_dir},
              {"desk_scale", c.desk_scale},
              {"per_class_subsample", c.per_class_subsample},
              {"encoder", c.encoder},
              {"style_model_path", c.style_model_path},
              {"style_fallback", c.style_fallback},
              {"ncm_normalize_means", c.ncm_normalize_means},
              {"ncm_normalize_features", c.ncm_normalize_features},
              {"save_checkpoints", c.save_checkpoints},
              {"reuse_existing", c.reuse_existing}};
}

void apply_override(RunConfig& c, const std::string& key, const json& value) {
  try {
    if (key == "dataset") c.dataset = value.get<std::string>();
    else if (key == "data_path") c.data_path = value.get<std::string>();
    else if (key == "num_tasks") c.num_tasks = value.get<int>();
    else if (key == "memory_capacity") c.memory_capacity = value.get<int>();
    else if (key == "stream_batch_size") c.stream_batch_size = value.get<int>();
    else if (key == "mem_batch_size") c.mem_batch_size = value.get<int>();
    else if (key == "mem_iters") c.mem_iters = value.get<int>();
    else if (key == "views") c.views = value.get<int>();
    else if (key == "n_dam") c.n_dam = value.get<int>();
    else if (key == "n_dac") c.n_dac = value.get<int>();
    else if (key == "n_das") c.n_das = value.get<int>();
    else if (key == "temperature") c.temperature = value.get<double>();
    else if (key == "lr") c.lr = value.get<double>();
    else if (key == "loss_reduction") c.loss_reduction = value.get<std::string>();
    else if (key == "seeds") c.seeds = value.get<std::vector<std::uint64_t>>();
    else if (key == "out_dir") c.out_dir = value.get<std::string>();
    else if (key == "desk_scale") c.desk_scale = value.get<bool>();
    else if (key == "per_class_subsample") c.per_class_subsample = value.get<int>();
    else if (key == "encoder") c.encoder = value.get<std::string>();
    else if (key == "style_model_path") c.style_model_path = value.get<std::string>();
    else if (key == "style_fallback") c.style_fallback = value.get<bool>();
    else if (key == "ncm_normalize_means") c.ncm_normalize_means = value.get<bool>();
    else if (key == "ncm_normalize_features") c.ncm_normalize_features = value.get<bool>();
    else if (key == "save_checkpoints") c.save_checkpoints = value.get<bool>();
    else if (key == "reuse_existing") c.reuse_existing = value.get<bool>();
    else throw std::invalid_argument("unknown config key: " + key);
  } catch (const json::exception& e) {
    throw std::invalid_argument("bad value for config key '" + key + "': " + e.what());
  }
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) apply_override(c, key, value);
  return c;
}

std::string config_hash(const RunConfig& config) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  return fnv1a_hex(run_config_to_json(config).dump());
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values) {
  const double m = mean_of(values);
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

namespace {

json evaluation_to_json(const EvaluationResult& r) {
  json per_class = json::object();
  for (const auto& [cls, acc] : r.per_class_accuracy) per_class[std::to_string(cls)] = acc;
  return json{{"final_average_accuracy", r.final_average_accuracy},
              {"per_class_accuracy", per_class},
              {"num_memory_examples_used", r.num_memory_examples_used},
              {"config_hash", r.config_hash},
              {"classes_missing_from_memory", r.classes_missing_from_memory},
              {"ncm_normalize_means", r.ncm_normalize_means},
              {"ncm_normalize_features", r.ncm_normalize_features}};
}

EvaluationResult evaluation_from_json(const json& j) {
  EvaluationResult r;
  r.final_average_accuracy = j.at("final_average_accuracy").get<double>();
  for (const auto& [cls, acc] : j.at("per_class_accuracy").items()) {
    r.per_class_accuracy[std::stoi(cls)] = acc.get<double>();
  }
  r.num_memory_examples_used = j.at("num_memory_examples_used").get<int>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.classes_missing_from_memory = j.at("classes_missing_from_memory").get<std::vector<int>>();
  r.ncm_normalize_means = j.at("ncm_normalize_means").get<bool>();
  r.ncm_normalize_features = j.at("ncm_normalize_features").get<bool>();
  return r;
}

}  // namespace

json MetricsRecord::to_json() const {
  json seeds_json = json::array();
  for (const auto& s : per_seed) {
    seeds_json.push_back(json{{"seed", s.seed},
                              {"evaluation", evaluation_to_json(s.evaluation)},
                              {"wall_seconds", s.wall_seconds},
                              {"final_loss", s.final_loss},
                              {"checkpoint_file", s.checkpoint_file},
                              {"trace_file", s.trace_file}});
  }
  return json{{"config_hash", hash},
              {"config", run_config_to_json(config)},
              {"per_seed", seeds_json},
              {"mean_accuracy", mean_accuracy},
              {"std_accuracy", std_accuracy},
              {"std_definition", "population standard deviation over seeds"},
              {"wall_seconds", wall_seconds},
              {"encoder_parameters", encoder_parameters},
              {"style_fallback_used", style_fallback_used}};
}

MetricsRecord MetricsRecord::from_json(const json& j) {
  MetricsRecord r;
  r.hash = j.at("config_hash").get<std::string>();
  r.config = run_config_from_json(j.at("config"));
  for (const auto& s : j.at("per_seed")) {
    SeedResult seed;
    seed.seed = s.at("seed").get<std::uint64_t>();
    seed.evaluation = evaluation_from_json(s.at("evaluation"));
    seed.wall_seconds = s.at("wall_seconds").get<double>();
    seed.final_loss = s.at("final_loss").get<double>();
    seed.checkpoint_file = s.at("checkpoint_file").get<std::string>();
    seed.trace_file = s.at("trace_file").get<std::string>();
    r.per_seed.push_back(std::move(seed));
  }
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.std_accuracy = j.at("std_accuracy").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.encoder_parameters = j.at("encoder_parameters").get<std::size_t>();
  r.style_fallback_used = j.at("style_fallback_used").get<bool>();
  return r;
}

fs::path dataset_root(const RunConfig& config) {
  if (!config.data_path.empty()) return config.data_path;
  const char* env = std::getenv("MVREPLAY_DATA_ROOT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("data");
  if (config.dataset == "cifar10") return root / "cifar-10-batches-bin";
  if (config.dataset == "synthetic10") return root / "synthetic10";
  throw std::invalid_argument("imagedir dataset requires data_path");
}

std::shared_ptr<const std::vector<LabeledExample>> load_split(const RunConfig& config,
                                                              Split split) {
  const fs::path root = dataset_root(config);
  if (config.dataset == "synthetic10") write_synthetic_dataset(root);

  std::ostringstream key;
  key << config.dataset << '|' << root.string() << '|' << (split == Split::train ? "train" : "test")
      << '|' << (config.desk_scale && split == Split::train ? config.per_class_subsample : 0);

  auto& cache = dataset_cache();
  std::lock_guard<std::mutex> lock(cache.mutex);
  auto it = cache.entries.find(key.str());
  if (it != cache.entries.end()) return it->second;

  const DatasetFormat format =
      config.dataset == "imagedir" ? DatasetFormat::image_directory : DatasetFormat::native_binary;
  fs::path path = root;
  if (config.dataset == "imagedir") path = root / (split == Split::train ? "train" : "test");
  const std::int64_t id_base = split == Split::train ? 0 : 1'000'000'000;
  auto examples = load_dataset(path, format, split, id_base);
  if (config.desk_scale && split == Split::train) {
    examples = subsample_per_class(examples, config.per_class_subsample, /*seed=*/0);
  }
  auto shared = std::make_shared<const std::vector<LabeledExample>>(std::move(examples));
  cache.entries[key.str()] = shared;
  return shared;
}

void save_checkpoint(const fs::path& file, const EncoderModel& model, const ReplayMemory& memory,
                     const std::string& hash) {
  fs::create_directories(file.parent_path().empty() ? "." : file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp.string());
    write_pod(out, kCheckpointMagic);
    write_pod(out, kCheckpointVersion);
    const json header{{"arch", encoder_arch_name(model.arch())},
                      {"input_side", model.input_side()},
                      {"config_hash", hash},
                      {"parameter_count", model.parameter_count()},
                      {"memory_capacity", memory.capacity()},
                      {"memory_seen", memory.seen_count()}};
    const std::string header_str = header.dump();
    write_pod(out, static_cast<std::uint64_t>(header_str.size()));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    write_tensor_map(out, model.to_tensors());
    const auto slots = memory.snapshot();
    write_pod(out, static_cast<std::uint64_t>(slots.size()));
    for (const auto& ex : slots) {
      write_pod(out, ex.id);
      write_pod(out, static_cast<std::int32_t>(ex.label.unseal()));
      write_pod(out, static_cast<std::int32_t>(ex.image.h));
      write_pod(out, static_cast<std::int32_t>(ex.image.w));
      write_pod(out, static_cast<std::int32_t>(ex.image.c));
      out.write(reinterpret_cast<const char*>(ex.image.data.data()),
                static_cast<std::streamsize>(ex.image.data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + tmp.string());
  }
  fs::rename(tmp, file);
}

Checkpoint load_checkpoint(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + file.string());
  if (read_pod<std::uint32_t>(in) != kCheckpointMagic) {
    throw std::runtime_error("not a checkpoint file: " + file.string());
  }
  if (read_pod<std::uint32_t>(in) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version: " + file.string());
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  if (header_len > (1ULL << 20)) throw std::runtime_error("corrupt checkpoint header");
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  const json header = json::parse(header_str);

  Checkpoint ckpt;
  ckpt.hash = header.at("config_hash").get<std::string>();
  ckpt.model = std::make_unique<EncoderModel>(
      encoder_arch_from_name(header.at("arch").get<std::string>()),
      header.at("input_side").get<int>(), /*seed=*/0);
  ckpt.model->load_tensors(read_tensor_map(in));

  const auto slot_count = read_pod<std::uint64_t>(in);
  std::vector<LabeledExample> slots;
  slots.reserve(slot_count);
  for (std::uint64_t i = 0; i < slot_count; ++i) {
    LabeledExample ex;
    ex.id = read_pod<std::int64_t>(in);
    ex.label = HiddenLabel(read_pod<std::int32_t>(in));
    const int h = read_pod<std::int32_t>(in);
    const int w = read_pod<std::int32_t>(in);
    const int c = read_pod<std::int32_t>(in);
    if (h <= 0 || w <= 0 || c <= 0 || h > 4096 || w > 4096 || c > 16) {
      throw std::runtime_error("corrupt checkpoint memory record");
    }
    ex.image = Image(h, w, c);
    in.read(reinterpret_cast<char*>(ex.image.data.data()),
            static_cast<std::streamsize>(ex.image.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint memory");
    slots.push_back(std::move(ex));
  }
  ckpt.memory = ReplayMemory::restore(header.at("memory_capacity").get<std::size_t>(),
                                      std::move(slots),
                                      header.at("memory_seen").get<std::uint64_t>());
  return ckpt;
}

EvaluationResult evaluate_checkpoint(const fs::path& file, const RunConfig& config) {
  const Checkpoint ckpt = load_checkpoint(file);
  const auto test_set = load_split(config, Split::test);
  EvaluationOptions options;
  options.normalize_means = config.ncm_normalize_means;
  options.normalize_features = config.ncm_normalize_features;
  options.config_hash = ckpt.hash;
  return evaluate_final(*ckpt.model, ckpt.memory, *test_set, options);
}

MetricsRecord run_experiment(const RunConfig& config, const LogFn& log) {
  config.validate();
  const std::string hash = config_hash(config);
  const fs::path run_dir = fs::path(config.out_dir) / hash;
  const fs::path record_file = run_dir / "metrics.jsonl";

  auto say = [&](const std::string& line) {
    if (log) log(line);
  };

  if (config.reuse_existing && fs::exists(record_file)) {
    std::ifstream in(record_file);
    std::string line;
    if (std::getline(in, line) && !line.empty()) {
      MetricsRecord existing = MetricsRecord::from_json(json::parse(line));
      if (existing.hash == hash) {
        say("[" + hash + "] reusing persisted record from " + record_file.string());
        return existing;
      }
    }
  }

  const auto train_set = load_split(config, Split::train);
  const auto test_set = load_split(config, Split::test);
  const auto style = make_style_model(config);
  const EncoderArch arch = encoder_arch_from_name(config.resolved_encoder());
  const int side = (*train_set)[0].image.h;

  MetricsRecord record;
  record.hash = hash;
  record.config = config;
  record.style_fallback_used = style.has_value() && style->is_fallback();

  const auto run_start = std::chrono::steady_clock::now();
  std::vector<double> accuracies;
  for (const std::uint64_t seed : config.seeds) {
    const auto seed_start = std::chrono::steady_clock::now();
    TaskSequence sequence = build_task_sequence(*train_set, config.num_tasks, seed);
    StreamBatches stream(train_set, std::move(sequence), config.stream_batch_size);
    EncoderModel model(arch, side, seed);
    record.encoder_parameters = model.parameter_count();
    ReplayMemory memory(static_cast<std::size_t>(config.memory_capacity));

    const fs::path trace_file = run_dir / ("loss_seed" + std::to_string(seed) + ".csv");
    std::ostringstream trace;
    trace << "step,loss,loss_sum,memory_fill,views,millis\n";
    const std::size_t total_steps =
        (stream.total_examples() + static_cast<std::size_t>(config.stream_batch_size) - 1) /
        static_cast<std::size_t>(config.stream_batch_size) *
        static_cast<std::size_t>(config.mem_iters);

    TrainStats stats = train_online(
        stream, config.train_config(seed), model, memory, style ? &*style : nullptr,
        [&](const StepRecord& r) {
          trace << r.step << ',' << r.loss << ',' << r.loss_sum << ',' << r.memory_fill << ','
                << r.views << ',' << r.millis << '\n';
          if (r.step % 100 == 0 || static_cast<std::size_t>(r.step) == total_steps) {
            say("[" + hash + "] seed " + std::to_string(seed) + " step " + std::to_string(r.step) +
                "/" + std::to_string(total_steps) + " loss " + std::to_string(r.loss));
          }
        });
    write_file_atomic(trace_file, trace.str());

    EvaluationOptions options;
    options.normalize_means = config.ncm_normalize_means;
    options.normalize_features = config.ncm_normalize_features;
    options.config_hash = hash;
    SeedResult seed_result;
    seed_result.seed = seed;
    seed_result.evaluation = evaluate_final(model, memory, *test_set, options);
    seed_result.final_loss = stats.log.empty() ? 0.0 : stats.log.back().loss;
    seed_result.trace_file = trace_file.string();
    if (config.save_checkpoints) {
      const fs::path ckpt_file = run_dir / ("ckpt_seed" + std::to_string(seed) + ".bin");
      save_checkpoint(ckpt_file, model, memory, hash);
      seed_result.checkpoint_file = ckpt_file.string();
    }
    seed_result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - seed_start).count();
    accuracies.push_back(seed_result.evaluation.final_average_accuracy);
    say("[" + hash + "] seed " + std::to_string(seed) + " final AA " +
        std::to_string(seed_result.evaluation.final_average_accuracy) + "% (" +
        std::to_string(seed_result.wall_seconds) + "s)");
    record.per_seed.push_back(std::move(seed_result));
  }

  record.mean_accuracy = mean_of(accuracies);
  record.std_accuracy = population_std(accuracies);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();

  write_file_atomic(run_dir / "config.json", run_config_to_json(config).dump(2) + "\n");
  write_file_atomic(record_file, record.to_json().dump() + "\n");
  say("[" + hash + "] mean final AA " + std::to_string(record.mean_accuracy) + " +/- " +
      std::to_string(record.std_accuracy) + " over " + std::to_string(config.seeds.size()) +
      " seeds");
  return record;
}

std::vector<MetricsRecord> run_sweep(const RunConfig& base,
                                     const std::map<std::string, std::vector<json>>& grid,
                                     const LogFn& log) {
  std::vector<MetricsRecord> records;
  if (grid.empty()) return records;
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw std::invalid_argument("sweep grid key '" + key + "' has no values");
  }

  // Deterministic cross-product enumeration in sorted-key order.
  std::vector<std::string> keys;
  for (const auto& [key, values] : grid) keys.push_back(key);
  std::vector<std::size_t> index(keys.size(), 0);

  std::ostringstream summary;
  summary << "config_hash";
  for (const auto& key : keys) summary << ',' << csv_escape(key);
  summary << ",mean_accuracy,std_accuracy,seeds\n";

  bool done = false;
  while (!done) {
    RunConfig cell = base;
    std::vector<std::string> cell_desc;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const json& value = grid.at(keys[k])[index[k]];
      apply_override(cell, keys[k], value);
      cell_desc.push_back(value.dump());
    }
    try {
      MetricsRecord record = run_experiment(cell, log);
      summary << record.hash;
      for (const auto& v : cell_desc) summary << ',' << csv_escape(v);
      summary << ',' << record.mean_accuracy << ',' << record.std_accuracy << ','
              << record.per_seed.size() << '\n';
      records.push_back(std::move(record));
    } catch (const std::exception& e) {
      if (log) log(std::string("sweep cell failed: ") + e.what());
      summary << "FAILED";
      for (const auto& v : cell_desc) summary << ',' << csv_escape(v);
      summary << ",,,\n";
    }

    done = true;
    for (std::size_t k = keys.size(); k-- > 0;) {
      if (++index[k] < grid.at(keys[k]).size()) {
        done = false;
        break;
      }
      index[k] = 0;
    }
  }
  write_file_atomic(fs::path(base.out_dir) / "sweep_summary.csv", summary.str());
  return records;
}

std::string assemble_report(const fs::path& out_dir) {
  std::vector<MetricsRecord> records;
  if (fs::exists(out_dir)) {
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      const fs::path record_file = entry.path() / "metrics.jsonl";
      if (!entry.is_directory() || !fs::exists(record_file)) continue;
      std::ifstream in(record_file);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(MetricsRecord::from_json(json::parse(line)));
      }
    }
  }
  std::sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    const auto key = [](const MetricsRecord& r) {
      return std::make_tuple(r.config.dataset, r.config.memory_capacity, r.config.mem_batch_size,
                             r.config.mem_iters, r.config.views, r.config.n_dam, r.config.n_dac,
                             r.config.n_das, r.hash);
    };
    return key(a) < key(b);
  });

  std::ostringstream csv;
  csv << "config_hash,dataset,encoder,M,mem_batch,q,p,dam,dac,das,seeds,mean_accuracy,"
         "std_accuracy\n";
  std::ostringstream table;
  table << std::left << std::setw(18) << "hash" << std::setw(12) << "dataset" << std::setw(11)
        << "encoder" << std::right << std::setw(6) << "M" << std::setw(6) << "|Bm|" << std::setw(4)
        << "q" << std::setw(4) << "p" << std::setw(10) << "daa" << std::setw(12) << "mean AA"
        << std::setw(10) << "std" << '\n';
  for (const auto& r : records) {
    csv << r.hash << ',' << r.config.dataset << ',' << r.config.resolved_encoder() << ','
        << r.config.memory_capacity << ',' << r.config.mem_batch_size << ',' << r.config.mem_iters
        << ',' << r.config.views << ',' << r.config.n_dam << ',' << r.config.n_dac << ','
        << r.config.n_das << ',' << r.per_seed.size() << ',' << r.mean_accuracy << ','
        << r.std_accuracy << '\n';
    std::ostringstream daa;
    daa << r.config.n_dam << '/' << r.config.n_dac << '/' << r.config.n_das;
    table << std::left << std::setw(18) << r.hash << std::setw(12) << r.config.dataset
          << std::setw(11) << r.config.resolved_encoder() << std::right << std::setw(6)
          << r.config.memory_capacity << std::setw(6) << r.config.mem_batch_size << std::setw(4)
          << r.config.mem_iters << std::setw(4) << r.config.views << std::setw(10) << daa.str()
          << std::setw(12) << std::fixed << std::setprecision(2) << r.mean_accuracy
          << std::setw(10) << r.std_accuracy << '\n';
  }
  write_file_atomic(out_dir / "report.csv", csv.str());
  return table.str();
}

}  // namespace mvreplay
