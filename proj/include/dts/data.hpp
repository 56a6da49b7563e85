#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include "dts/numerics.hpp"

namespace dts {

/// Feature rows paired with their class labels.
struct Dataset {
  Matrix features;
  LabelVector labels;

  Dataset() = default;
  Dataset(Matrix features, LabelVector labels);

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int num_classes() const { return labels.num_classes(); }

  /// Rows selected by `indices`, in that order.
  Dataset subset(std::span<const Eigen::Index> indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.features == b.features && a.labels == b.labels;
  }
};

/// Thrown for malformed CSV input; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Gaussian blobs whose class means sit on the unit sphere in R^dim.
/// spread = 0 yields the noiseless dataset (every sample equals its class mean).
/// Rows are emitted class by class.
Dataset make_blobs(int num_classes, int samples_per_class, int dim, double spread, std::uint64_t seed);

/// Comma-separated rows, final column an integer label. LF or CRLF line endings.
Dataset load_csv(const std::filesystem::path& path, int num_classes, bool skip_header = false);
/// Writes floats in shortest round-trip form so load_csv reproduces them exactly.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Seeded shuffle, then the first round(train_fraction * N) rows become the training side.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace dts
