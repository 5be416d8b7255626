#include "ppa/eval/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "ppa/errors.hpp"

namespace ppa::eval {

namespace fs = std::filesystem;

json RunningStats::to_json() const {
  return {{"count", count}, {"mean", mean()}, {"rmse", rmse()}, {"mean_abs", mean_abs()}};
}

BinnedStats::BinnedStats(double lo_, double hi_, double width_) : lo(lo_), hi(hi_), width(width_) {
  if (!(hi > lo) || !(width > 0)) throw std::invalid_argument("BinnedStats: empty range");
  bins.resize(static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9)));
}

bool BinnedStats::add(double axis, double error) {
  if (!(axis >= lo && axis <= hi)) return false;
  auto i = static_cast<std::size_t>((axis - lo) / width);
  i = std::min(i, bins.size() - 1);
  bins[i].add(error);
  return true;
}

void BinnedStats::merge(const BinnedStats& o) {
  for (std::size_t i = 0; i < bins.size(); ++i) bins[i].merge(o.bins[i]);
}

std::int64_t BinnedStats::total() const {
  std::int64_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

Density2D::Density2D(double lo, double hi, double width) : axis_bins(lo, hi, width) {
  counts.assign(axis_bins.bins.size() * error_bins(), 0);
}

std::size_t Density2D::error_bins() const {
  return static_cast<std::size_t>(std::ceil((err_hi - err_lo) / err_width - 1e-9));
}

void Density2D::add(double axis, double error) {
  if (!(axis >= axis_bins.lo && axis <= axis_bins.hi)) return;
  auto a = static_cast<std::size_t>((axis - axis_bins.lo) / axis_bins.width);
  a = std::min(a, axis_bins.bins.size() - 1);
  const double e = std::clamp(error, err_lo, err_hi);
  auto b = static_cast<std::size_t>((e - err_lo) / err_width);
  b = std::min(b, error_bins() - 1);
  ++counts[a * error_bins() + b];
}

void Density2D::merge(const Density2D& o) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
}

json to_json(const Check& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold},
          {"comparison", c.comparison}};
}

json make_report(const std::string& kind, const json& provenance, const json& summary,
                 const std::vector<Check>& checks) {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back(to_json(c));
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"provenance", provenance}, {"summary", summary},
          {"checks", cs}};
}

void validate_report(const json& r) {
  auto fail = [](const std::string& what) { throw SchemaMismatch("report: " + what); };
  if (!r.is_object()) fail("not a JSON object");
  for (const char* key : {"schema_version", "kind", "provenance", "summary", "checks"})
    if (!r.contains(key)) fail(std::string("missing key '") + key + "'");
  if (!r["schema_version"].is_string()) fail("schema_version is not a string");
  const std::string version = r["schema_version"];
  if (version.substr(0, version.find('.')) != std::string(kSchemaVersion).substr(0, 1))
    fail("unsupported schema_version " + version);
  if (!r["kind"].is_string()) fail("kind is not a string");
  if (!r["provenance"].is_object() || !r["summary"].is_object()) fail("provenance and summary must be objects");
  if (!r["checks"].is_array()) fail("checks is not an array");
  for (const auto& c : r["checks"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() || !c.contains("passed") ||
        !c["passed"].is_boolean() || !c.contains("value") || !c["value"].is_number() || !c.contains("threshold") ||
        !c["threshold"].is_number())
      fail("malformed check entry");
  }
}

bool all_checks_pass(const json& r) {
  return std::all_of(r["checks"].begin(), r["checks"].end(), [](const json& c) { return c["passed"].get<bool>(); });
}

json merge_reports(const std::vector<json>& reports) {
  if (reports.empty()) throw std::invalid_argument("merge_reports: no inputs");
  for (const auto& r : reports) validate_report(r);
  if (reports.size() == 1) return reports.front();

  json provenance = json::object(), summary = json::object(), checks = json::array();
  std::map<std::string, int> seen;
  for (const auto& r : reports) {
    std::string key = r["kind"];
    if (const int n = ++seen[key]; n > 1) key += "#" + std::to_string(n);
    provenance[key] = r["provenance"];
    summary[key] = r["summary"];
    for (auto c : r["checks"]) {
      if (!c.contains("source")) c["source"] = key;
      checks.push_back(c);
    }
  }
  return {{"schema_version", kSchemaVersion}, {"kind", "combined"}, {"provenance", provenance},
          {"summary", summary}, {"checks", checks}};
}

json read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaMismatch(path.string() + ": " + e.what());
  }
  validate_report(j);
  return j;
}

void write_report(const fs::path& path, const json& report) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << report.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "w");
  if (!file_) throw IoError("cannot write " + path.string());
  for (const auto& h : header) *this << h;
  end_row();
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::sep() {
  if (!first_) std::fputc(',', file_);
  first_ = false;
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  std::fprintf(file_, "%.17g", v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t v) {
  sep();
  std::fprintf(file_, "%lld", static_cast<long long>(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  sep();
  std::fputs(v.c_str(), file_);
  return *this;
}

void CsvWriter::end_row() {
  std::fputc('\n', file_);
  first_ = true;
  if (std::ferror(file_)) throw IoError("write failed: " + path_.string());
}

void write_binned_csv(const fs::path& path, const std::string& axis,
                      const std::vector<std::pair<std::string, const BinnedStats*>>& series) {
  CsvWriter csv(path, {"model", axis + "_lo_deg", axis + "_hi_deg", "count", "mean_deg", "rmse_deg", "mean_abs_deg"});
  for (const auto& [model, stats] : series)
    for (std::size_t i = 0; i < stats->bins.size(); ++i) {
      const auto& b = stats->bins[i];
      const double lo = stats->lo + double(i) * stats->width;
      csv << model << lo << std::min(lo + stats->width, stats->hi) << b.count << b.mean() << b.rmse()
          << b.mean_abs();
      csv.end_row();
    }
}

void write_density_csv(const fs::path& path, const std::string& axis,
                       const std::vector<std::pair<std::string, const Density2D*>>& series) {
  CsvWriter csv(path, {"model", axis + "_lo_deg", "error_lo_deg", "count"});
  for (const auto& [model, d] : series) {
    const std::size_t eb = d->error_bins();
    for (std::size_t a = 0; a < d->axis_bins.bins.size(); ++a)
      for (std::size_t b = 0; b < eb; ++b) {
        const auto n = d->counts[a * eb + b];
        if (n == 0) continue;
        csv << model << d->axis_bins.lo + double(a) * d->axis_bins.width << d->err_lo + double(b) * d->err_width << n;
        csv.end_row();
      }
  }
}

}  // namespace ppa::eval
