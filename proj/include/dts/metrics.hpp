#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

namespace dts {

/// One row of training telemetry. Distillation writes one per batch; supervised
/// training writes one per epoch (batch = number of batches, temperature = 1).
struct MetricsRecord {
  int epoch = 0;
  int batch = 0;
  double temperature = 0.0;
  double alpha = 0.0;
  double d_loss = 0.0;
  double teacher_ce = 0.0;
  double student_ce = 0.0;
  double kd_loss = 0.0;
  double total_loss = 0.0;
  double lr = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr std::array<std::string_view, 10> kMetricsColumns = {
    "epoch", "batch", "temperature", "alpha", "d_loss", "teacher_ce", "student_ce", "kd_loss", "total_loss", "lr"};

/// Header row plus one line per record; floats in shortest round-trip form.
void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace dts
