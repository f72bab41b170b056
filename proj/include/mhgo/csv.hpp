#pragma once

// Trajectory CSV: header row, one row per record, 15 significant digits,
// and a trailing comment line when the run diverged.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mhgo/error.hpp"
#include "mhgo/simulation.hpp"

namespace mhgo {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  return std::string(buf, r.ptr);
}

inline std::string csv_row(const TrajectoryRecord& rec) {
  std::string line = format_number(rec.t);
  auto put = [&line](double v) {
    line += ',';
    line += format_number(v);
  };
  for (double v : rec.x) put(v);
  for (double v : rec.xhat) put(v);
  for (double v : rec.u) put(v);
  for (double v : rec.y) put(v);
  for (const Vec& b : rec.beta)
    for (double v : b) put(v);
  for (std::size_t s : rec.sigma) {
    line += ',';
    line += std::to_string(s + 1);
  }
  line += '\n';
  return line;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const ColumnLayout& columns) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorKind::io, "cannot write " + path.string());
    out_ << "t";
    for (const auto& c : columns.names) out_ << ',' << c;
    out_ << '\n';
    check();
  }

  void write(const TrajectoryRecord& rec) {
    out_ << csv_row(rec);
    check();
  }

  void finish(const MetricsSummary& m) {
    if (m.diverged) out_ << "# diverged at t=" << format_number(m.escape_time) << '\n';
    out_.flush();
    check();
    out_.close();
  }

 private:
  void check() {
    if (!out_) throw Error(ErrorKind::io, "write failed: " + path_.string());
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline void emit_csv(const std::vector<TrajectoryRecord>& records, const ColumnLayout& columns,
                     const MetricsSummary& m, const std::filesystem::path& path) {
  CsvWriter w(path, columns);
  for (const auto& r : records) w.write(r);
  w.finish(m);
}

}  // namespace mhgo
