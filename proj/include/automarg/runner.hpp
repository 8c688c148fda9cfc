#pragma once

#include <optional>
#include <string>
#include <vector>

#include "automarg/diagnostics.hpp"
#include "automarg/sampler.hpp"
#include "automarg/transform.hpp"
#include "automarg/zoo.hpp"

namespace automarg {

enum class Mode { Hmc, HmcM, HmcR };

Mode parse_mode(const std::string& s);  // "hmc" | "hmc-m" | "hmc-r"
const char* mode_name(Mode m);

struct RunConfig {
  std::string model;
  std::string data_path;               // empty: bundled default dataset
  Mode mode = Mode::HmcM;
  std::optional<std::vector<std::string>> exempt;  // unset: model default
  NutsConfig nuts;
  std::string out_path;                // empty: stdout only
  std::string draws_csv_path;          // empty: no CSV
  bool explain = false;
};

struct ExperimentReport {
  std::string json;                    // serialized report, schema 1
  EssReport ess;
  int reduced_dim = 0;
  int original_dim = 0;
  std::vector<ReversalEvent> transformation_log;
  double sampling_time_s = 0.0;        // warmup + draws + recovery
  double transform_time_s = 0.0;
  int total_divergent = 0;
};

// CSV with a header row; every cell must parse as a number.
Dataset load_dataset(const std::string& path);

ExperimentReport run(const RunConfig& config);

}  // namespace automarg
