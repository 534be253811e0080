#include "mvreplay.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvreplay/harness.hpp"
#include "mvreplay/version.hpp"

using nlohmann::json;

struct mvr_config {
  mvreplay::RunConfig config;
};

struct mvr_metrics {
  std::vector<mvreplay::MetricsRecord> records;
  std::vector<mvreplay::EvaluationResult> evaluations;  // for checkpoint re-evaluation
};

namespace {

thread_local std::string g_last_error;

mvr_status fail(mvr_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mvr_status guard(const std::function<mvr_status()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MVR_ERROR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(MVR_ERROR_RUNTIME, e.what());
  } catch (...) {
    return fail(MVR_ERROR_RUNTIME, "unknown error");
  }
}

mvreplay::LogFn make_log(mvr_log_callback log, void* user_data) {
  if (log == nullptr) return {};
  return [log, user_data](const std::string& line) { log(line.c_str(), user_data); };
}

json evaluation_json(const mvreplay::EvaluationResult& r) {
  json per_class = json::object();
  for (const auto& [cls, acc] : r.per_class_accuracy) per_class[std::to_string(cls)] = acc;
  return json{{"final_average_accuracy", r.final_average_accuracy},
              {"per_class_accuracy", per_class},
              {"num_memory_examples_used", r.num_memory_examples_used},
              {"config_hash", r.config_hash},
              {"classes_missing_from_memory", r.classes_missing_from_memory}};
}

}  // namespace

extern "C" {

const char* mvr_version(void) { return mvreplay::kVersion; }

const char* mvr_last_error(void) { return g_last_error.c_str(); }

void mvr_string_free(char* s) { std::free(s); }

mvr_status mvr_config_create(mvr_config** out_config) {
  if (out_config == nullptr) return fail(MVR_ERROR_INVALID_ARGUMENT, "out_config is null");
  return guard([&] {
    *out_config = new mvr_config();
    return MVR_OK;
  });
}

mvr_status mvr_config_from_json(const char* json_text, mvr_config** out_config) {
  if (json_text == nullptr || out_config == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    const json j = json::parse(json_text);
    auto handle = std::make_unique<mvr_config>();
    handle->config = mvreplay::run_config_from_json(j);
    *out_config = handle.release();
    return MVR_OK;
  });
}

mvr_status mvr_config_set(mvr_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = std::string(value);  // bare strings are convenient for CLI use
    }
    mvreplay::apply_override(config->config, key, parsed);
    return MVR_OK;
  });
}

mvr_status mvr_config_to_json(const mvr_config* config, char** out_json) {
  if (config == nullptr || out_json == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    *out_json = copy_string(mvreplay::run_config_to_json(config->config).dump(2));
    return *out_json != nullptr ? MVR_OK : fail(MVR_ERROR_RUNTIME, "allocation failed");
  });
}

mvr_status mvr_config_hash(const mvr_config* config, char** out_hash) {
  if (config == nullptr || out_hash == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    *out_hash = copy_string(mvreplay::config_hash(config->config));
    return *out_hash != nullptr ? MVR_OK : fail(MVR_ERROR_RUNTIME, "allocation failed");
  });
}

void mvr_config_destroy(mvr_config* config) { delete config; }

mvr_status mvr_run(const mvr_config* config, mvr_log_callback log, void* user_data,
                   mvr_metrics** out_metrics) {
  if (config == nullptr || out_metrics == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    auto metrics = std::make_unique<mvr_metrics>();
    metrics->records.push_back(mvreplay::run_experiment(config->config, make_log(log, user_data)));
    *out_metrics = metrics.release();
    return MVR_OK;
  });
}

mvr_status mvr_sweep(const mvr_config* config, const char* grid_json, mvr_log_callback log,
                     void* user_data, mvr_metrics** out_metrics) {
  if (config == nullptr || grid_json == nullptr || out_metrics == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    const json grid_spec = json::parse(grid_json);
    if (!grid_spec.is_object()) {
      throw std::invalid_argument("sweep grid must be a JSON object of value arrays");
    }
    std::map<std::string, std::vector<json>> grid;
    for (const auto& [key, values] : grid_spec.items()) {
      if (!values.is_array()) {
        throw std::invalid_argument("sweep grid key '" + key + "' must map to an array");
      }
      grid[key] = std::vector<json>(values.begin(), values.end());
    }
    auto metrics = std::make_unique<mvr_metrics>();
    metrics->records = mvreplay::run_sweep(config->config, grid, make_log(log, user_data));
    *out_metrics = metrics.release();
    return MVR_OK;
  });
}

mvr_status mvr_evaluate_checkpoint(const char* checkpoint_path, const mvr_config* config,
                                   mvr_metrics** out_metrics) {
  if (checkpoint_path == nullptr || config == nullptr || out_metrics == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    auto metrics = std::make_unique<mvr_metrics>();
    metrics->evaluations.push_back(
        mvreplay::evaluate_checkpoint(checkpoint_path, config->config));
    *out_metrics = metrics.release();
    return MVR_OK;
  });
}

mvr_status mvr_report(const char* records_dir, char** out_table) {
  if (records_dir == nullptr || out_table == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    *out_table = copy_string(mvreplay::assemble_report(records_dir));
    return *out_table != nullptr ? MVR_OK : fail(MVR_ERROR_RUNTIME, "allocation failed");
  });
}

mvr_status mvr_metrics_to_json(const mvr_metrics* metrics, char** out_json) {
  if (metrics == nullptr || out_json == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return guard([&] {
    json out = json::array();
    for (const auto& record : metrics->records) out.push_back(record.to_json());
    for (const auto& evaluation : metrics->evaluations) out.push_back(evaluation_json(evaluation));
    *out_json = copy_string(out.dump(2));
    return *out_json != nullptr ? MVR_OK : fail(MVR_ERROR_RUNTIME, "allocation failed");
  });
}

size_t mvr_metrics_count(const mvr_metrics* metrics) {
  if (metrics == nullptr) return 0;
  return metrics->records.size() + metrics->evaluations.size();
}

mvr_status mvr_metrics_accuracy(const mvr_metrics* metrics, size_t index, double* out_mean,
                                double* out_std) {
  if (metrics == nullptr || out_mean == nullptr || out_std == nullptr) {
    return fail(MVR_ERROR_INVALID_ARGUMENT, "null argument");
  }
  if (index < metrics->records.size()) {
    *out_mean = metrics->records[index].mean_accuracy;
    *out_std = metrics->records[index].std_accuracy;
    return MVR_OK;
  }
  const size_t eval_index = index - metrics->records.size();
  if (eval_index < metrics->evaluations.size()) {
    *out_mean = metrics->evaluations[eval_index].final_average_accuracy;
    *out_std = 0.0;
    return MVR_OK;
  }
  return fail(MVR_ERROR_INVALID_ARGUMENT, "metrics index out of range");
}

void mvr_metrics_destroy(mvr_metrics* metrics) { delete metrics; }

}  // extern "C"
