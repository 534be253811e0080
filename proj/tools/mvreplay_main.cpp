// Command-line front end. Talks to the library exclusively through the C API
// in mvreplay.h.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvreplay.h"

namespace {

using nlohmann::json;

void print_log_line(const char* line, void* /*user_data*/) { std::printf("%s\n", line); }

struct ConfigHandle {
  mvr_config* ptr = nullptr;
  ~ConfigHandle() { mvr_config_destroy(ptr); }
};

struct MetricsHandle {
  mvr_metrics* ptr = nullptr;
  ~MetricsHandle() { mvr_metrics_destroy(ptr); }
};

[[noreturn]] void die(const std::string& context) {
  std::fprintf(stderr, "error: %s: %s\n", context.c_str(), mvr_last_error());
  std::exit(1);
}

void check(mvr_status status, const std::string& context) {
  if (status != MVR_OK) die(context);
}

// Common experiment flags shared by run/sweep/eval; collected as (key, json
// value) pairs applied onto a default config.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::vector<std::pair<std::string, json>> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config file (flags override its fields)");
    add_flag_opt<std::string>(cmd, "--dataset", "dataset", "cifar10 | synthetic10 | imagedir");
    add_flag_opt<std::string>(cmd, "--data-path", "data_path", "dataset location on disk");
    add_flag_opt<int>(cmd, "--tasks", "num_tasks", "number of class-incremental tasks");
    add_flag_opt<int>(cmd, "--memory-size", "memory_capacity", "reservoir capacity M");
    add_flag_opt<int>(cmd, "--mem-batch-size", "mem_batch_size", "memory batch size |Bm|");
    add_flag_opt<int>(cmd, "--mem-iters", "mem_iters", "memory iterations q");
    add_flag_opt<int>(cmd, "--views", "views", "standard augmentations per source (p)");
    cmd->add_option_function<std::string>(
           "--daa",
           [this](const std::string& value) {
             int dam = 0, dac = 0, das = 0;
             char extra = 0;
             if (std::sscanf(value.c_str(), "%d,%d,%d%c", &dam, &dac, &das, &extra) != 3) {
               throw CLI::ValidationError("--daa expects M,C,S (e.g. 1,1,1)");
             }
             overrides.emplace_back("n_dam", dam);
             overrides.emplace_back("n_dac", dac);
             overrides.emplace_back("n_das", das);
           },
           "domain-aware view counts as DAM,DAC,DAS");
    add_flag_opt<double>(cmd, "--temperature", "temperature", "contrastive temperature");
    add_flag_opt<double>(cmd, "--lr", "lr", "SGD learning rate");
    cmd->add_option_function<std::vector<std::uint64_t>>(
           "--seeds,--seed",
           [this](const std::vector<std::uint64_t>& seeds) {
             overrides.emplace_back("seeds", json(seeds));
           },
           "run seeds")
        ->delimiter(',');
    add_flag_opt<std::string>(cmd, "--loss-reduction", "loss_reduction",
                              "sum | mean_over_anchors");
    add_flag_opt<std::string>(cmd, "--encoder", "encoder", "resnet18 | small_cnn");
    add_flag_opt<std::string>(cmd, "--style-model", "style_model_path",
                              "style transfer weights file");
    add_bool_flag(cmd, "--style-fallback", "style_fallback",
                  "use channel-statistics style transfer instead of weights");
    add_bool_flag(cmd, "--desk-scale", "desk_scale",
                  "small encoder + per-class train subsample for CPU budgets");
    add_flag_opt<int>(cmd, "--per-class-subsample", "per_class_subsample",
                      "train images kept per class in desk-scale mode");
    add_flag_opt<std::string>(cmd, "--out", "out_dir", "output directory for records");
    add_bool_flag(cmd, "--reuse", "reuse_existing",
                  "return the persisted record when one exists for this config");
    add_bool_flag(cmd, "--no-checkpoints", "save_checkpoints",
                  "skip writing checkpoint files", /*value=*/false);
  }

  ConfigHandle build() const {
    ConfigHandle handle;
    if (config_file) {
      std::FILE* f = std::fopen(config_file->c_str(), "rb");
      if (f == nullptr) {
        std::fprintf(stderr, "error: cannot open config file %s\n", config_file->c_str());
        std::exit(1);
      }
      std::string text;
      char buf[4096];
      std::size_t got = 0;
      while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, got);
      std::fclose(f);
      check(mvr_config_from_json(text.c_str(), &handle.ptr), "parsing config file");
    } else {
      check(mvr_config_create(&handle.ptr), "creating config");
    }
    for (const auto& [key, value] : overrides) {
      check(mvr_config_set(handle.ptr, key.c_str(), value.dump().c_str()),
            "setting config key '" + key + "'");
    }
    return handle;
  }

 private:
  template <typename T>
  void add_flag_opt(CLI::App* cmd, const std::string& flag, std::string key,
                    const std::string& description) {
    cmd->add_option_function<T>(
        flag, [this, key = std::move(key)](const T& v) { overrides.emplace_back(key, json(v)); },
        description);
  }

  void add_bool_flag(CLI::App* cmd, const std::string& flag, std::string key,
                     const std::string& description, bool value = true) {
    cmd->add_flag_callback(
        flag, [this, key = std::move(key), value] { overrides.emplace_back(key, json(value)); },
        description);
  }
};

void print_metrics(const MetricsHandle& metrics) {
  char* text = nullptr;
  check(mvr_metrics_to_json(metrics.ptr, &text), "serializing metrics");
  std::printf("%s\n", text);
  mvr_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay-based unsupervised online continual learner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mvr_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress lines");

  auto* run_cmd = app.add_subcommand("run", "train and evaluate one configuration");
  ConfigFlags run_flags;
  run_flags.add_to(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "cross-product grid of configurations");
  ConfigFlags sweep_flags;
  sweep_flags.add_to(sweep_cmd);
  std::vector<std::string> grid_specs;
  sweep_cmd->add_option("--grid", grid_specs, "grid entry key=v1,v2,... (repeatable)")
      ->required();

  auto* eval_cmd = app.add_subcommand("eval", "re-evaluate a stored checkpoint");
  ConfigFlags eval_flags;
  eval_flags.add_to(eval_cmd);
  std::string checkpoint_path;
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

  auto* report_cmd = app.add_subcommand("report", "summarize records in an output directory");
  std::string report_dir = "runs";
  report_cmd->add_option("--out", report_dir, "records directory");

  CLI11_PARSE(app, argc, argv);
  const mvr_log_callback log = quiet ? nullptr : &print_log_line;

  if (run_cmd->parsed()) {
    ConfigHandle config = run_flags.build();
    MetricsHandle metrics;
    check(mvr_run(config.ptr, log, nullptr, &metrics.ptr), "running experiment");
    print_metrics(metrics);
    return 0;
  }

  if (sweep_cmd->parsed()) {
    ConfigHandle config = sweep_flags.build();
    json grid = json::object();
    for (const auto& spec : grid_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::fprintf(stderr, "error: --grid expects key=v1,v2,... (got '%s')\n", spec.c_str());
        return 1;
      }
      json values = json::array();
      std::stringstream list(spec.substr(eq + 1));
      std::string item;
      while (std::getline(list, item, ',')) {
        try {
          values.push_back(json::parse(item));
        } catch (const json::exception&) {
          values.push_back(item);
        }
      }
      grid[spec.substr(0, eq)] = values;
    }
    MetricsHandle metrics;
    check(mvr_sweep(config.ptr, grid.dump().c_str(), log, nullptr, &metrics.ptr),
          "running sweep");
    print_metrics(metrics);
    return 0;
  }

  if (eval_cmd->parsed()) {
    ConfigHandle config = eval_flags.build();
    MetricsHandle metrics;
    check(mvr_evaluate_checkpoint(checkpoint_path.c_str(), config.ptr, &metrics.ptr),
          "evaluating checkpoint");
    print_metrics(metrics);
    return 0;
  }

  if (report_cmd->parsed()) {
    char* table = nullptr;
    check(mvr_report(report_dir.c_str(), &table), "assembling report");
    std::printf("%s", table);
    mvr_string_free(table);
    return 0;
  }

  return 0;
}
