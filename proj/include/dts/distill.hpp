#pragma once

#include <vector>

#include "dts/data.hpp"
#include "dts/metrics.hpp"
#include "dts/model.hpp"
#include "dts/scheduler.hpp"

namespace dts {

struct DistillConfig {
  double kd_weight = 0.9;
  double ce_weight = 0.1;
  SchedulerSpec scheduler;
  SgdConfig sgd;

  void validate() const;
  friend bool operator==(const DistillConfig&, const DistillConfig&) = default;
};

struct DistillResult {
  Mlp student;
  std::vector<MetricsRecord> metrics;
};

/// Trains `student` on ce_weight * CE + kd_weight * KD(T) against a frozen
/// teacher, consulting the scheduler once per batch with the two batch CE losses.
DistillResult distill(const Mlp& teacher, Mlp student, const Dataset& data, const DistillConfig& config);

struct Evaluation {
  double accuracy = 0.0;
  double mean_ce = 0.0;
};

/// Top-1 accuracy (argmax ties go to the lowest class index) and mean CE.
Evaluation evaluate(const Mlp& model, const Dataset& data);

}  // namespace dts
