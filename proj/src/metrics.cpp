#include "dts/metrics.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dts {

namespace {

void append_double(std::string& line, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, res.ptr);
}

template <typename T>
T parse_cell(std::string_view cell, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::runtime_error("metrics line " + std::to_string(line_no) + ": bad cell '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  std::string line;
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) line.push_back(',');
    line += kMetricsColumns[i];
  }
  line.push_back('\n');
  out << line;
  for (const auto& r : records) {
    line = std::to_string(r.epoch) + ',' + std::to_string(r.batch);
    for (const double v : {r.temperature, r.alpha, r.d_loss, r.teacher_ce, r.student_ce, r.kd_loss, r.total_loss, r.lr}) {
      line.push_back(',');
      append_double(line, v);
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<MetricsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != kMetricsColumns.size()) {
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": expected " +
                               std::to_string(kMetricsColumns.size()) + " columns");
    }
    MetricsRecord r;
    r.epoch = parse_cell<int>(cells[0], line_no);
    r.batch = parse_cell<int>(cells[1], line_no);
    r.temperature = parse_cell<double>(cells[2], line_no);
    r.alpha = parse_cell<double>(cells[3], line_no);
    r.d_loss = parse_cell<double>(cells[4], line_no);
    r.teacher_ce = parse_cell<double>(cells[5], line_no);
    r.student_ce = parse_cell<double>(cells[6], line_no);
    r.kd_loss = parse_cell<double>(cells[7], line_no);
    r.total_loss = parse_cell<double>(cells[8], line_no);
    r.lr = parse_cell<double>(cells[9], line_no);
    records.push_back(r);
  }
  return records;
}

}  // namespace dts
