#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace ppa::eval {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0.0";

/// Streaming count / mean / RMSE of signed samples.
struct RunningStats {
  std::int64_t count = 0;
  double sum = 0.0, sum_sq = 0.0, sum_abs = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
    sum_abs += std::abs(x);
  }
  void merge(const RunningStats& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
    sum_abs += o.sum_abs;
  }
  double mean() const { return count ? sum / double(count) : 0.0; }
  double rmse() const { return count ? std::sqrt(sum_sq / double(count)) : 0.0; }
  double mean_abs() const { return count ? sum_abs / double(count) : 0.0; }
  json to_json() const;
};

/// Error statistics over uniform bins of an axis [lo, hi]; the last bin is
/// closed so the upper bound is counted.
struct BinnedStats {
  double lo = 0.0, hi = 1.0, width = 1.0;
  std::vector<RunningStats> bins;

  BinnedStats() = default;
  BinnedStats(double lo, double hi, double width);
  /// False when `axis` lies outside [lo, hi].
  bool add(double axis, double error);
  void merge(const BinnedStats& o);
  std::int64_t total() const;
};

/// Joint histogram of (axis, signed error): plot-ready density.
struct Density2D {
  BinnedStats axis_bins;  // only the layout is used
  double err_lo = -90.0, err_hi = 90.0, err_width = 1.0;
  std::vector<std::int64_t> counts;  // axis-major

  Density2D() = default;
  Density2D(double lo, double hi, double width);
  void add(double axis, double error);
  void merge(const Density2D& o);
  std::size_t error_bins() const;
};

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "<", "<=", ">", ">=", "=="

  static Check less(std::string name, double value, double threshold) {
    return {std::move(name), value < threshold, value, threshold, "<"};
  }
  static Check less_equal(std::string name, double value, double threshold) {
    return {std::move(name), value <= threshold, value, threshold, "<="};
  }
  static Check greater(std::string name, double value, double threshold) {
    return {std::move(name), value > threshold, value, threshold, ">"};
  }
  static Check greater_equal(std::string name, double value, double threshold) {
    return {std::move(name), value >= threshold, value, threshold, ">="};
  }
};

json to_json(const Check& c);

json make_report(const std::string& kind, const json& provenance, const json& summary,
                 const std::vector<Check>& checks);

/// Structural validation; throws SchemaMismatch.
void validate_report(const json& report);

bool all_checks_pass(const json& report);

/// One report passes through unchanged; several become a "combined" report
/// whose summary and provenance are keyed by the input kinds and whose
/// checks carry their source kind.
json merge_reports(const std::vector<json>& reports);

json read_report(const std::filesystem::path& path);
void write_report(const std::filesystem::path& path, const json& report);

/// Deterministic CSV writer with round-trip precision for doubles.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(std::int64_t v);
  CsvWriter& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(const std::string& v);
  CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
  void end_row();

 private:
  void sep();
  std::FILE* file_ = nullptr;
  bool first_ = true;
  std::filesystem::path path_;
};

void write_binned_csv(const std::filesystem::path& path, const std::string& axis,
                      const std::vector<std::pair<std::string, const BinnedStats*>>& series);
void write_density_csv(const std::filesystem::path& path, const std::string& axis,
                       const std::vector<std::pair<std::string, const Density2D*>>& series);

}  // namespace ppa::eval
