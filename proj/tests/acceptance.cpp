// Acceptance gate: one PASS/FAIL line per criterion; exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ppa/angles.hpp"
#include "ppa/eval/commands.hpp"
#include "ppa/normal_estimation.hpp"
#include "ppa/phase_models.hpp"
#include "ppa/polarization.hpp"
#include "ppa/synthetic.hpp"

using namespace ppa;
using Eigen::Vector3d;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Random ray in front of the camera and a random normal facing it.
std::pair<Unit3d, Unit3d> random_ray_normal(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto v = Unit3d::normalize(u(gen), u(gen), 1.0);
  Unit3d n;
  do {
    n = Unit3d::normalize(g(gen), g(gen), g(gen));
  } while (n.dot(v.vec()) > -0.05);
  return {n, v};
}

Outcome stokes_round_trip() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> iavg(0.01, 10.0), rho(1e-3, 1.0), phi(0.0, kPi<double>);
  double worst_i = 0, worst_rho = 0, worst_phi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double ia = iavg(gen), r = rho(gen), p = phi(gen);
    const auto in = synthesize_intensities(ia, r, p);
    const auto px = state_from_stokes(stokes_from_intensities(in[0], in[1], in[2], in[3]), 0.0);
    worst_i = std::max(worst_i, std::abs(px.iavg - ia) / std::max(1.0, ia));
    worst_rho = std::max(worst_rho, std::abs(px.dolp - r));
    // the phase carries rho times less signal than the intensities
    worst_phi = std::max(worst_phi, phase_distance(px.aolp, p) * r);
  }
  const double worst = std::max({worst_i, worst_rho, worst_phi});
  return {worst < 1e-12, fmt("max error %.3g (iavg %.3g, dolp %.3g, rho-weighted phase %.3g)", worst, worst_i,
                             worst_rho, worst_phi)};
}

Outcome constraint_exactness() {
  std::mt19937_64 gen(102);
  double worst_p = 0, worst_o = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto [n, v] = random_ray_normal(gen);
    worst_p = std::max(worst_p, std::abs(ppa_constraint_row(ppa_phase(n, v), v).m.dot(n.vec())));
    worst_o = std::max(worst_o, std::abs(opa_constraint_row(opa_phase(n)).m.dot(n.vec())));
  }
  return {worst_p < 1e-12 && worst_o < 1e-12, fmt("max |m.n| ppa %.3g, opa %.3g", worst_p, worst_o)};
}

Outcome equivalence_cases() {
  std::mt19937_64 gen(103);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto z = Unit3d::normalize(0, 0, 1);
  double worst[5] = {0, 0, 0, 0, 0};
  bool classified = true;
  for (int i = 0; i < 1000; ++i) {
    const auto n1 = Unit3d::normalize(u(gen), u(gen), -1.0);
    classified &= classify_equivalence(n1, z).count(1) == 1;
    worst[1] = std::max(worst[1], phase_distance(ppa_phase(n1, z), opa_phase(n1)));

    const double az = kPi<double> * (u(gen) + 1), tv = 0.4 * (u(gen) + 1) + 0.05, tn = 0.5 * (u(gen) + 1) + 0.05;
    const auto v2 = Unit3d::normalize(tv * std::cos(az), tv * std::sin(az), 1.0);
    const auto n2 = Unit3d::normalize(-tn * std::cos(az), -tn * std::sin(az), -1.0);
    classified &= classify_equivalence(n2, v2).count(2) == 1;
    worst[2] = std::max(worst[2], phase_distance(ppa_phase(n2, v2), opa_phase(n2)));

    // n on the optical axis: the OPA phase is undefined, so the models are
    // compared as constraints. Both rows annihilate n and coincide.
    const auto v3 = Unit3d::normalize(u(gen), u(gen), 1.0);
    const auto n3 = Unit3d::normalize(0, 0, -1);
    classified &= classify_equivalence(n3, v3).count(3) == 1;
    const double phi = ppa_phase(n3, v3);
    worst[3] = std::max({worst[3], (ppa_constraint_row(phi, v3).m - opa_constraint_row(phi).m).norm(),
                         std::abs(ppa_constraint_row(phi, v3).m.dot(n3.vec()))});

    const auto n4 = Unit3d::normalize(u(gen), u(gen), 0.0);
    const auto v4 = Unit3d::normalize(u(gen), u(gen), 1.0);
    classified &= classify_equivalence(n4, v4).count(4) == 1;
    worst[4] = std::max(worst[4], phase_distance(ppa_phase(n4, v4), opa_phase(n4)));
  }
  Unit3d n, v;
  do std::tie(n, v) = random_ray_normal(gen);
  while (!classify_equivalence(n, v).empty());
  const double d = phase_distance(ppa_phase(n, v), opa_phase(n));
  const bool ok = classified && worst[1] < 1e-9 && worst[2] < 1e-9 && worst[3] < 1e-9 && worst[4] < 1e-9 && d > 1e-3;
  return {ok, fmt("max d case1 %.3g, case2 %.3g, case3 (rows) %.3g, case4 %.3g; non-equivalent d %.3g rad", worst[1],
                  worst[2], worst[3], worst[4], d)};
}

Outcome model_accuracy() {
  eval::EvalConfig cfg;
  cfg.blur_sigma = 0.0;
  const auto data = eval::memory_dataset(default_scene(282, 7));
  const auto r = eval::run_model_accuracy(data, cfg);
  const auto& s = r["summary"];
  const double ppa = s["ppa"]["rmse_deg"], opa = s["opa"]["rmse_deg"];
  const double edge = s["opa"]["edge_mean_abs_deg"], center = s["opa"]["center_mean_abs_deg"];
  return {ppa < 1e-7 && opa > 5.0 && edge > center,
          fmt("282 views, %lld px: ppa rmse %.3g deg, opa rmse %.3f deg, opa edge %.2f > center %.2f deg",
              s["ppa"]["pixels"].get<long long>(), ppa, opa, edge, center)};
}

Outcome single_view_estimation() {
  auto scene = [](double tilt_deg) {
    SceneSpec spec;
    spec.intrinsics = default_intrinsics();
    const double t = deg2rad(tilt_deg);
    spec.poses = {look_at(300.0 * Vector3d(std::sin(t), 0.0, std::cos(t)), Vector3d::Zero(), Vector3d::UnitX())};
    return spec;
  };
  auto error = [](const SceneSpec& spec, int& pixels) {
    const auto view = render_view(spec, 0);
    const auto state = extract_state(compute_stokes(view.frame), 0.1);
    const auto est = estimate_plane_normal_map(state.aolp, view.gt_aolp.mask, spec.intrinsics);
    pixels = est.inlier_count;
    return angle_between<double>(est.normal.vec(), view.normal_camera.vec());
  };
  int pixels = 0;
  const double noiseless = error(scene(35.0), pixels);
  double worst = 0;
  int min_pixels = pixels;
  for (int t = 0; t < 50; ++t) {
    auto spec = scene(20.0 + 0.6 * t);
    spec.noise.aolp_sigma = deg2rad(2.0);
    spec.seed = 1000 + static_cast<std::uint64_t>(t);
    worst = std::max(worst, rad2deg(error(spec, pixels)));
    min_pixels = std::min(min_pixels, pixels);
  }
  return {noiseless < 1e-6 && worst < 1.0 && min_pixels >= 100000,
          fmt("noiseless %.3g rad; sigma 2 deg over 50 trials: max %.3f deg, min pixels %d", noiseless, worst,
              min_pixels)};
}

Outcome multi_view_ordering() {
  eval::EvalConfig cfg;
  cfg.noise_aolp_deg = 2.0;
  cfg.sweep_views = true;
  const auto data = eval::memory_dataset(default_scene(282, 7));
  const auto r = eval::run_estimate(data, cfg);
  const auto& s = r["summary"];
  const double fp = s["ppa"]["fraction_below_25deg"], fo = s["opa"]["fraction_below_25deg"];
  const double mp = s["ppa"]["median_deg"], mo = s["opa"]["median_deg"];
  double prev = 0, max_rise = -1e300;
  int k_first = 0, k_last = 0;
  for (const auto& row : s["per_views"]) {
    const double mean = row["ppa"]["mean_deg"];
    const int k = row["views"];
    if (k_first == 0) k_first = k;
    else max_rise = std::max(max_rise, mean - prev);
    prev = mean;
    k_last = k;
  }
  const bool ok = fp > fo && mp < 0.5 * mo && k_first == 2 && k_last == 20 && max_rise <= 0.5;
  return {ok, fmt("K=3: below 25 deg ppa %.3f vs opa %.3f, median ppa %.3f vs opa %.3f deg; K=%d..%d max mean rise "
                  "%.3f deg",
                  fp, fo, mp, mo, k_first, k_last, max_rise)};
}

Outcome contour_ratio() {
  eval::EvalConfig cfg;
  const auto noisy = eval::run_contours(
      eval::memory_dataset(eval::contour_scene(default_intrinsics(), deg2rad(2.0), 7)), cfg);
  cfg.blur_sigma = 0.0;
  const auto clean = eval::run_contours(eval::memory_dataset(eval::contour_scene(default_intrinsics(), 0.0, 7)), cfg);
  const double ratio = noisy["summary"]["ppa_over_opa_rmse"];
  const double exact = clean["summary"]["ppa_rmse_mm"];
  const int seeds = noisy["summary"]["seeds_used"];
  return {ratio <= 0.25 && exact < 1e-6 && seeds == 20,
          fmt("sigma 2 deg: ppa %.3f mm / opa %.3f mm = %.4f over %d seeds; noiseless ppa %.3g mm",
              noisy["summary"]["ppa_rmse_mm"].get<double>(), noisy["summary"]["opa_rmse_mm"].get<double>(), ratio,
              seeds, exact)};
}

Outcome degeneracies() {
  bool ok = true;
  auto expect = [&](auto fn, auto tag) {
    try {
      fn();
      ok = false;
    } catch (const decltype(tag)&) {
    } catch (...) {
      ok = false;
    }
  };
  const auto v = Unit3d::normalize(0.3, -0.2, 1.0);
  expect([&] { ppa_phase(-v, v); }, DegenerateRayNormal(""));
  expect([&] { ppa_phase(v, v); }, DegenerateRayNormal(""));
  const auto nz = Unit3d::normalize(0, 0, 1);
  expect([&] { opa_phase(nz); }, DegenerateNormal(""));
  // the same normal stays usable under the perspective model
  double phi = -1;
  try {
    phi = ppa_phase(nz, v);
  } catch (...) {
    ok = false;
  }
  ok &= std::abs(ppa_constraint_row(phi, v).m.dot(nz.vec())) < 1e-12;
  return {ok, fmt("n||v -> DegenerateRayNormal, OPA n=(0,0,1) -> DegenerateNormal, PPA phase there %.4f rad", phi)};
}

void run_pipeline(const fs::path& root) {
  eval::SynthConfig synth;
  synth.out = root / "dataset";
  eval::cmd_synth(synth);
  const auto data = eval::open_dataset(synth.out);
  eval::EvalConfig cfg;
  cfg.dataset = synth.out;
  cfg.out = root / "model_accuracy";
  eval::run_model_accuracy(data, cfg);
  cfg.out = root / "estimate";
  eval::run_estimate(data, cfg);
  cfg.out = root / "contours";
  eval::run_contours(data, cfg);
  eval::cmd_report({root / "model_accuracy/report.json", root / "estimate/report.json", root / "contours/report.json"},
                   root / "report");
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  return std::equal(std::istreambuf_iterator<char>(fa), {}, std::istreambuf_iterator<char>(fb), {});
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "ppa_acceptance_determinism";
  fs::remove_all(base);
  double seconds[2];
  for (int i = 0; i < 2; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_pipeline(base / std::to_string(i));
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  int compared = 0, differing = 0, missing = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "0")) {
    if (!e.is_regular_file()) continue;
    const auto other = base / "1" / fs::relative(e.path(), base / "0");
    ++compared;
    if (!fs::exists(other)) ++missing;
    else if (!same_bytes(e.path(), other)) ++differing;
  }
  int second_count = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "1")) second_count += e.is_regular_file();
  fs::remove_all(base);
  const bool ok = compared > 0 && differing == 0 && missing == 0 && second_count == compared;
  return {ok, fmt("%d files compared, %d differ, %d missing; pipeline %.1f s and %.1f s", compared, differing, missing,
                  seconds[0], seconds[1])};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "stokes round trip", 1.0, stokes_round_trip},
      {2, "constraint exactness", 1.0, constraint_exactness},
      {3, "equivalence cases", 1.0, equivalence_cases},
      {4, "ppa exact, opa error grows to the edges", 30.0, model_accuracy},
      {5, "single-view normal estimation", 60.0, single_view_estimation},
      {6, "multi-view ordering", 180.0, multi_view_ordering},
      {7, "contour ratio", 30.0, contour_ratio},
      {8, "degeneracy handling", 1.0, degeneracies},
      {9, "determinism of the default pipeline", 600.0, determinism},
  };
  // optional list of criterion ids to run
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.passed && s < c.budget_s;
    failed += !pass;
    std::cout << "criterion " << c.id << " [" << (pass ? "PASS" : "FAIL") << "] " << c.name << ": " << o.detail
              << fmt(" (%.2f s, budget %.0f s)", s, c.budget_s) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
