#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dts/config.hpp"

namespace dts::harness {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kRuntimeFailure = 2,
  kVerificationFailure = 3,
};

/// Result of one training run, as written to runs/<name>/result.csv.
struct RunOutcome {
  std::string run;
  std::string group;  // scheduler name, sweep range label, "teacher", ...
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double test_accuracy = 0.0;
  double test_ce = 0.0;
  double train_accuracy = 0.0;
};

/// Aggregate over seeds for one group, accuracies in percent.
struct GroupSummary {
  std::string group;
  double mean_accuracy_pct = 0.0;
  double std_accuracy_pct = 0.0;  // sample standard deviation; 0 for a single run
  int runs = 0;
  int failed = 0;
};

/// Groups in first-appearance order.
std::vector<GroupSummary> summarize(const std::vector<RunOutcome>& outcomes);

/// Train/test split of the configured dataset.
struct Data {
  Dataset train;
  Dataset test;
};
Data load_data(const ExperimentConfig& config);

std::uint64_t teacher_seed(std::uint64_t run_seed);
std::uint64_t student_seed(std::uint64_t run_seed);

/// Writes output_dir/dataset.csv.
std::filesystem::path cmd_generate_data(const ExperimentConfig& config, bool zero_spread, std::ostream& log);
/// One teacher per seed under runs/teacher_seed<N>/.
std::vector<RunOutcome> cmd_train_teacher(const ExperimentConfig& config, std::ostream& log);
/// Distills one student per seed from an existing teacher checkpoint.
std::vector<RunOutcome> cmd_distill(const ExperimentConfig& config, std::ostream& log);

struct CompareResult {
  std::vector<RunOutcome> runs;
  std::vector<GroupSummary> ranked;  // best mean first
};
/// Every configured scheduler (plus the optional CE-only student) across all seeds,
/// sharing one teacher per seed. Writes summary.csv and summary.txt.
CompareResult cmd_compare(const ExperimentConfig& config, std::ostream& log);

struct SweepResult {
  std::vector<RunOutcome> runs;
  std::vector<GroupSummary> rows;  // config order
};
/// DTS over each configured (t_max -> t_min) range with everything else fixed.
/// Writes sweep.csv (range, mean accuracy) and sweep_table.txt.
SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& log);

/// Runs the finite-difference suites; returns kVerificationFailure if any check fails.
int cmd_grad_check(std::uint64_t seed, int instances, bool perturb, std::ostream& log);

/// Entry point shared by the dtslab executable and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dts::harness
