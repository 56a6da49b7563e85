#include "dts/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>
#include <vector>

#include "dts/random.hpp"

namespace dts {

Dataset::Dataset(Matrix features_in, LabelVector labels_in)
    : features(std::move(features_in)), labels(std::move(labels_in)) {
  if (features.rows() < 1) throw std::invalid_argument("dataset must contain at least one row");
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (!features.allFinite()) throw std::invalid_argument("dataset features contain non-finite values");
}

Dataset Dataset::subset(std::span<const Eigen::Index> indices) const {
  Matrix rows(static_cast<Eigen::Index>(indices.size()), features.cols());
  std::vector<int> picked;
  picked.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = features.row(indices[i]);
    picked.push_back(labels[indices[i]]);
  }
  return Dataset(std::move(rows), LabelVector(std::move(picked), labels.num_classes()));
}

Dataset make_blobs(int num_classes, int samples_per_class, int dim, double spread, std::uint64_t seed) {
  if (num_classes < 1 || samples_per_class < 1 || dim < 1) {
    throw std::invalid_argument("make_blobs: num_classes, samples_per_class and dim must be >= 1");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw std::invalid_argument("make_blobs: spread must be finite and >= 0");

  Rng rng(mix_seed(seed, seed_tag::blobs));
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix means(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    while (norm < 1e-8) {
      for (int j = 0; j < dim; ++j) means(c, j) = normal(rng);
      norm = means.row(c).norm();
    }
    means.row(c) /= norm;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(num_classes) * samples_per_class;
  Matrix features(n, dim);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s, ++row) {
      for (int j = 0; j < dim; ++j) {
        const double noise = normal(rng);
        features(row, j) = means(c, j) + spread * noise;
      }
      labels.push_back(c);
    }
  }
  return Dataset(std::move(features), LabelVector(std::move(labels), num_classes));
}

namespace {

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view cell, T& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, int num_classes, bool skip_header) {
  if (num_classes < 1) throw std::invalid_argument("load_csv: num_classes must be >= 1");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && skip_header) continue;
    if (trim(line).empty()) continue;

    const auto cells = split_cells(line);
    if (cells.size() < 2) throw ParseError("expected at least one feature column and a label", line_no);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw ParseError("ragged row: " + std::to_string(cells.size()) + " columns, expected " + std::to_string(width),
                       line_no);
    }
    for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
      double v = 0.0;
      if (!parse_number(cells[j], v) || !std::isfinite(v)) {
        throw ParseError("malformed numeric cell '" + std::string(trim(cells[j])) + "' in column " +
                             std::to_string(j + 1),
                         line_no);
      }
      values.push_back(v);
    }
    int label = 0;
    if (!parse_number(cells.back(), label)) {
      throw ParseError("malformed integer label '" + std::string(trim(cells.back())) + "'", line_no);
    }
    if (label < 0 || label >= num_classes) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw std::invalid_argument("'" + path.string() + "' contains no data rows");

  const auto rows = static_cast<Eigen::Index>(labels.size());
  const auto cols = static_cast<Eigen::Index>(width - 1);
  Matrix features = Eigen::Map<const Matrix>(values.data(), rows, cols);
  return Dataset(std::move(features), LabelVector(std::move(labels), num_classes));
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  char buf[64];
  std::string line;
  for (Eigen::Index r = 0; r < dataset.size(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < dataset.dim(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), dataset.features(r, c));
      line.append(buf, res.ptr);
      line.push_back(',');
    }
    line += std::to_string(dataset.labels[r]);
    line.push_back('\n');
    out << line;
  }
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must lie in (0, 1)");
  const Eigen::Index n = dataset.size();
  const auto n_train = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train <= 0 || n_train >= n) {
    throw std::invalid_argument("train_fraction " + std::to_string(train_fraction) + " leaves an empty side for " +
                                std::to_string(n) + " rows");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(mix_seed(seed, seed_tag::split));
  std::shuffle(order.begin(), order.end(), rng);
  const std::span<const Eigen::Index> all(order);
  return {dataset.subset(all.first(static_cast<std::size_t>(n_train))),
          dataset.subset(all.subspan(static_cast<std::size_t>(n_train)))};
}

}  // namespace dts
