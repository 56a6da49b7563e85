#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dts/data.hpp"
#include "dts/distill.hpp"
#include "dts/model.hpp"
#include "dts/scheduler.hpp"

namespace dts {

/// Schema violations, unknown keys and unreadable config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  enum class Source { blobs, csv };
  Source source = Source::blobs;
  int num_classes = 10;
  int samples_per_class = 200;
  int dim = 16;
  double spread = 0.35;
  std::uint64_t seed = 15;
  std::filesystem::path path;  // csv only
  bool skip_header = false;    // csv only
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct NamedScheduler {
  std::string name;
  SchedulerSpec spec;

  friend bool operator==(const NamedScheduler&, const NamedScheduler&) = default;
};

struct TemperatureRange {
  double t_max = 8.0;
  double t_min = 4.0;

  /// "8->4"
  std::string label() const;
  friend bool operator==(const TemperatureRange&, const TemperatureRange&) = default;
};

struct ExperimentConfig {
  std::string name = "reference";
  DatasetSpec dataset;
  std::vector<int> teacher_layers{16, 64, 64, 10};
  SgdConfig teacher_sgd;
  /// Optional explicit teacher checkpoint for `distill`; defaults to runs/teacher_seed<N>/model.bin.
  std::filesystem::path teacher_checkpoint;
  std::vector<int> student_layers{16, 16, 10};
  std::string distill_name = "dts";
  DistillConfig distill;
  std::vector<NamedScheduler> compare;
  bool compare_student_baseline = false;
  std::vector<TemperatureRange> sweep;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "out";

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// The desk-scale reference task: 10 classes, 200 samples each, 16 dimensions,
/// spread 0.35, a 16-64-64-10 teacher and a 16-16-10 student.
ExperimentConfig reference_config();

/// The temperature ranges of the range-sensitivity ablation: 3->1, 4->2, 6->4, 8->4, 11->9.
std::vector<TemperatureRange> reference_sweep_ranges();

/// Canonical scheduler list for `compare`: static 4, cosine-only 8->4, linear 8->4, DTS 8->4.
std::vector<NamedScheduler> reference_compare_schedulers();

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form (sorted keys, two-space indent, trailing newline).
std::string dump_config(const ExperimentConfig& config);

SchedulerSpec scheduler_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json scheduler_to_json(const SchedulerSpec& spec);
nlohmann::json sgd_to_json(const SgdConfig& sgd);

}  // namespace dts
