#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ppa/errors.hpp"
#include "ppa/eval/commands.hpp"
#include "ppa/eval/dataset.hpp"
#include "ppa/eval/report.hpp"

using namespace ppa;
using namespace ppa::eval;

namespace {
json sample_report(const std::string& kind, bool pass) {
  return make_report(kind, {{"tool", kToolVersion}}, {{"value", 1.5}},
                     {Check::less("a", pass ? 0.5 : 2.0, 1.0), Check::greater_equal("b", 3.0, 3.0)});
}
}  // namespace

TEST_CASE("config_hash is 64-bit FNV-1a of the compact dump") {
  // reference values computed with an independent FNV-1a implementation
  CHECK(config_hash(json::object()) == "08f44b07b5901a25");
  CHECK(config_hash(json{{"views", 282}, {"seed", 7}}) == "adee4077a6693495");
  CHECK(config_hash(json{{"seed", 8}}) != config_hash(json{{"seed", 7}}));
}

TEST_CASE("scene JSON round trip") {
  SceneSpec spec = default_scene(4, 11);
  spec.noise.aolp_sigma = 0.03;
  spec.dolp_mode = DolpMode::SpecularFresnel;
  const SceneSpec back = scene_from_json(json::parse(to_json(spec).dump()));
  REQUIRE(back.poses.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.poses[i].rotation == spec.poses[i].rotation);
    CHECK(back.poses[i].center == spec.poses[i].center);
  }
  CHECK(back.intrinsics.fx == spec.intrinsics.fx);
  CHECK(back.intrinsics.cx == spec.intrinsics.cx);
  CHECK(back.board.normal.vec() == spec.board.normal.vec());
  CHECK(back.noise.aolp_sigma == spec.noise.aolp_sigma);
  CHECK(back.dolp_mode == DolpMode::SpecularFresnel);
  CHECK(back.seed == 11);
  CHECK(to_json(back) == to_json(spec));
}

TEST_CASE("RunningStats and BinnedStats") {
  RunningStats s;
  for (double x : {1.0, -2.0, 3.0}) s.add(x);
  CHECK(s.mean() == doctest::Approx(2.0 / 3.0));
  CHECK(s.rmse() == doctest::Approx(std::sqrt(14.0 / 3.0)));
  CHECK(s.mean_abs() == doctest::Approx(2.0));

  BinnedStats b(0.0, 90.0, 2.0);
  CHECK(b.bins.size() == 45);
  CHECK(b.add(0.0, 1.0));
  CHECK(b.add(90.0, 1.0));  // last bin is closed
  CHECK(b.add(1.999, 1.0));
  CHECK_FALSE(b.add(-0.1, 1.0));
  CHECK_FALSE(b.add(90.1, 1.0));
  CHECK(b.bins[0].count == 2);
  CHECK(b.bins[44].count == 1);
  CHECK(b.total() == 3);
}

TEST_CASE("check comparisons") {
  CHECK(Check::less("x", 1.0, 1.0).passed == false);
  CHECK(Check::less_equal("x", 1.0, 1.0).passed);
  CHECK(Check::greater("x", 1.0, 1.0).passed == false);
  CHECK(Check::greater_equal("x", 1.0, 1.0).passed);
}

TEST_CASE("merge_reports") {
  SUBCASE("a single report passes through") {
    const auto r = sample_report("estimate", true);
    CHECK(merge_reports({r}) == r);
  }
  SUBCASE("several reports are keyed by kind") {
    const auto m = merge_reports({sample_report("estimate", true), sample_report("contours", false),
                                  sample_report("estimate", true)});
    CHECK(m["kind"] == "combined");
    CHECK(m["summary"].contains("estimate"));
    CHECK(m["summary"].contains("contours"));
    CHECK(m["summary"].contains("estimate#2"));
    CHECK(m["provenance"]["contours"]["tool"] == kToolVersion);
    REQUIRE(m["checks"].size() == 6);
    CHECK(m["checks"][2]["source"] == "contours");
    CHECK_FALSE(all_checks_pass(m));
    validate_report(m);
  }
  SUBCASE("schema mismatch") {
    auto r = sample_report("estimate", true);
    r["schema_version"] = "2.0.0";
    CHECK_THROWS_AS(merge_reports({r}), SchemaMismatch);
    r = sample_report("estimate", true);
    r.erase("checks");
    CHECK_THROWS_AS(validate_report(r), SchemaMismatch);
    CHECK_THROWS_AS(merge_reports({}), std::invalid_argument);
  }
}

TEST_CASE("report and CSV files are deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "ppa_test_eval_io";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto r = sample_report("estimate", true);
  write_report(dir / "r.json", r);
  CHECK(read_report(dir / "r.json") == r);
  {
    CsvWriter csv(dir / "t.csv", {"a", "b", "c"});
    csv << 0.1 << std::int64_t(3) << "x";
    csv.end_row();
  }
  std::ifstream in(dir / "t.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "a,b,c");
  CHECK(row == "0.10000000000000001,3,x");  // round-trip precision
  std::filesystem::remove_all(dir);
}

TEST_CASE("model accuracy on a small in-memory dataset") {
  EvalConfig cfg;
  cfg.blur_sigma = 0.0;
  const auto r = run_model_accuracy(memory_dataset(default_scene(3, 5)), cfg);
  CHECK(r["summary"]["ppa"]["rmse_deg"].get<double>() < 1e-7);
  CHECK(r["summary"]["opa"]["rmse_deg"].get<double>() > r["summary"]["ppa"]["rmse_deg"].get<double>());
  CHECK(all_checks_pass(r));
  validate_report(r);
}

TEST_CASE("configuration errors") {
  EvalConfig cfg;
  cfg.model = "xyz";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  SynthConfig s;
  s.scene = "contour";
  s.views = 3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
