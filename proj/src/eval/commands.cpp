#include "ppa/eval/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ppa/angles.hpp"
#include "ppa/contour.hpp"
#include "ppa/errors.hpp"
#include "ppa/image_io.hpp"
#include "ppa/normal_estimation.hpp"
#include "ppa/parallel.hpp"
#include "ppa/polarization.hpp"

namespace ppa::eval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- configs

void SynthConfig::validate() const {
  if (views < 1) throw std::invalid_argument("synth: views must be at least 1");
  if (scene != "random" && scene != "contour") throw std::invalid_argument("synth: scene must be random or contour");
  if (scene == "contour" && views != 2) throw std::invalid_argument("synth: the contour scene has exactly 2 views");
  if (noise_aolp_deg < 0 || noise_intensity < 0) throw std::invalid_argument("synth: noise must be non-negative");
  if (width < 2 || height < 2) throw std::invalid_argument("synth: image too small");
}

json SynthConfig::to_json() const {
  return {{"views", views},          {"seed", seed},   {"scene", scene}, {"noise_aolp_deg", noise_aolp_deg},
          {"noise_intensity", noise_intensity}, {"width", width}, {"height", height}};
}

void EvalConfig::validate() const {
  if (model != "opa" && model != "ppa" && model != "both") throw std::invalid_argument("model must be opa, ppa or both");
  if (!(dolp_threshold >= 0.0 && dolp_threshold < 1.0)) throw std::invalid_argument("dolp threshold must lie in [0, 1)");
  if (!(blur_sigma >= 0.0)) throw std::invalid_argument("blur sigma must be non-negative");
  if (views < 1) throw std::invalid_argument("views must be at least 1");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (noise_aolp_deg && *noise_aolp_deg < 0.0) throw std::invalid_argument("noise must be non-negative");
  if (mode != "single" && mode != "multi") throw std::invalid_argument("mode must be single or multi");
  if (sweep_views && sweep_max_views < 2) throw std::invalid_argument("sweep needs at least 2 views");
  if (seeds < 1 || !(step_px > 0.0) || window < 0) throw std::invalid_argument("invalid contour parameters");
}

std::vector<ModelKind> EvalConfig::models() const {
  if (model == "opa") return {ModelKind::OPA};
  if (model == "ppa") return {ModelKind::PPA};
  return {ModelKind::PPA, ModelKind::OPA};
}

json EvalConfig::to_json() const {
  // paths are left out so reports do not depend on where they were run
  return {{"model", model},
          {"dolp_threshold", dolp_threshold},
          {"blur_sigma", blur_sigma},
          {"views", views},
          {"trials", trials},
          {"seed", seed},
          {"noise_aolp_deg", noise_aolp_deg ? json(*noise_aolp_deg) : json(nullptr)},
          {"mode", mode},
          {"sweep_views", sweep_views},
          {"from_images", from_images},
          {"ref_view", ref_view},
          {"second_view", second_view},
          {"seeds", seeds},
          {"step_px", step_px},
          {"window", window}};
}

// ---------------------------------------------------------------- scenes

SceneSpec contour_scene(const Intrinsicsd& k, double noise_aolp_rad, std::uint64_t seed) {
  SceneSpec s;
  s.intrinsics = k;
  s.noise.aolp_sigma = noise_aolp_rad;
  s.seed = seed;
  const double tilt = deg2rad(40.0), tilt2 = deg2rad(30.0), az2 = deg2rad(120.0);
  const Eigen::Vector3d d1(std::sin(tilt), 0.0, std::cos(tilt));
  const Eigen::Vector3d d2(std::sin(tilt2) * std::cos(az2), std::sin(tilt2) * std::sin(az2), std::cos(tilt2));
  s.poses = {look_at(500.0 * d1, s.board.center, s.board.axis_u.vec()),
             look_at(500.0 * d2, s.board.center, s.board.axis_u.vec())};
  return s;
}

SceneSpec make_scene(const SynthConfig& cfg) {
  cfg.validate();
  const Intrinsicsd k = default_intrinsics(cfg.width, cfg.height);
  SceneSpec s;
  if (cfg.scene == "contour") {
    s = contour_scene(k, deg2rad(cfg.noise_aolp_deg), cfg.seed);
  } else {
    s = default_scene(cfg.views, cfg.seed);
    s.intrinsics = k;
    if (cfg.width != 640 || cfg.height != 480)
      s.poses = sample_poses(s.board, k, cfg.views, PoseSampling{}, cfg.seed);
    s.noise.aolp_sigma = deg2rad(cfg.noise_aolp_deg);
  }
  s.noise.intensity_sigma = cfg.noise_intensity;
  return s;
}

void cmd_synth(const SynthConfig& cfg) {
  if (cfg.out.empty()) throw std::invalid_argument("synth: --out is required");
  write_dataset(make_scene(cfg), cfg.out, cfg.to_json());
}

// ---------------------------------------------------------------- shared

namespace {

constexpr double kFraction25 = 25.0;

json provenance(const Dataset& data, const std::string& command, const EvalConfig& cfg, json notes = json::array()) {
  if (data.source == "synthetic")
    notes.push_back("synthetic data: absolute errors are not comparable with physical captures");
  return {{"tool", kToolVersion},   {"command", command},         {"source", data.source},
          {"dataset_hash", data.hash}, {"config", cfg.to_json()}, {"notes", notes}};
}

void require_ground_truth(const Dataset& data) {
  if (!data.has_ground_truth()) throw MissingGroundTruth("dataset has no board plane to score against");
}

void prepare_output(const EvalConfig& cfg) {
  if (!cfg.out.empty()) fs::create_directories(cfg.out);
}

/// AoLP after the preprocessing chain (blur, Stokes, DoLP mask, removal of
/// the specular offset) and the region it is scored on: board pixels whose
/// blur support stays on the board.
struct Observed {
  ScalarMap<double> aolp;
  Mask region;
};

Observed observe(const RenderedView& view, const Dataset& data, const EvalConfig& cfg) {
  const auto frame = cfg.blur_sigma > 0.0 ? gaussian_blur(view.frame, cfg.blur_sigma) : view.frame;
  auto state = extract_state(compute_stokes(frame), cfg.dolp_threshold);
  Observed o;
  o.aolp = std::move(state.aolp);
  const double shift = data.scene.aolp_shift;
  if (shift != 0.0) o.aolp.values = o.aolp.values.unaryExpr([shift](double p) { return canonical_phase(p - shift); });
  const int radius = cfg.blur_sigma > 0.0 ? static_cast<int>(std::ceil(3.0 * cfg.blur_sigma)) : 0;
  o.region = erode(view.gt_depth.mask, radius) && o.aolp.mask;
  o.aolp.mask = o.region;
  return o;
}

double median(std::vector<double> v) { return v.empty() ? 0.0 : detail::median(std::move(v)); }

double fraction_below(const std::vector<double>& v, double x) {
  if (v.empty()) return 0.0;
  return double(std::count_if(v.begin(), v.end(), [x](double e) { return e < x; })) / double(v.size());
}

json error_summary(const std::vector<double>& errors_deg, int ill_conditioned, int attempted) {
  double sum = 0.0, mx = 0.0;
  for (double e : errors_deg) {
    sum += e;
    mx = std::max(mx, e);
  }
  return {{"attempted", attempted},
          {"solved", errors_deg.size()},
          {"ill_conditioned", ill_conditioned},
          {"mean_deg", errors_deg.empty() ? 0.0 : sum / double(errors_deg.size())},
          {"median_deg", median(errors_deg)},
          {"max_deg", mx},
          {"fraction_below_25deg", fraction_below(errors_deg, kFraction25)}};
}

void write_cdf(CsvWriter& csv, const std::string& model, int k, const std::vector<double>& errors_deg,
               int attempted) {
  std::vector<double> sorted = errors_deg;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i <= 180; ++i) {
    const double x = 0.5 * i;
    const auto n = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    // ill-conditioned trials never count as solved below any threshold
    csv << model << k << x << (attempted ? double(n) / double(attempted) : 0.0);
    csv.end_row();
  }
}

json estimate_record(const NormalEstimate<double>& est, int views, int pixels) {
  return {{"normal", {est.normal.x(), est.normal.y(), est.normal.z()}},
          {"eigenvalues", {est.eigenvalues[0], est.eigenvalues[1], est.eigenvalues[2]}},
          {"condition_ratio", est.condition_ratio},
          {"views", views},
          {"pixels", pixels}};
}

}  // namespace

// ---------------------------------------------------------------- model accuracy

namespace {

struct ModelAccum {
  RunningStats all, center, edge;
  BinnedStats viewing{0.0, 90.0, 2.0}, azimuth{-180.0, 180.0, 4.0}, zenith{0.0, 90.0, 2.0};
  Density2D d_viewing{0.0, 90.0, 2.0}, d_azimuth{-180.0, 180.0, 4.0}, d_zenith{0.0, 90.0, 2.0};
  std::int64_t degenerate = 0;
};

}  // namespace

json run_model_accuracy(const Dataset& data, const EvalConfig& cfg) {
  cfg.validate();
  require_ground_truth(data);
  prepare_output(cfg);
  const auto models = cfg.models();
  std::map<ModelKind, ModelAccum> acc;
  for (auto m : models) acc[m];
  const Intrinsicsd& k = data.scene.intrinsics;
  const double half_diag = std::hypot(k.width / 2.0, k.height / 2.0);
  const bool write = !cfg.out.empty();
  std::unique_ptr<CsvWriter> pixels;
  if (write && cfg.write_pixels)
    pixels = std::make_unique<CsvWriter>(
        cfg.out / "pixels.csv", std::vector<std::string>{"view", "u", "v", "model", "predicted_deg", "measured_deg",
                                                         "error_deg", "viewing_angle_deg", "azimuth_diff_deg",
                                                         "zenith_deg"});

  for (std::size_t vi = 0; vi < data.view_count(); ++vi) {
    const RenderedView view = data.load_view(vi, cfg.from_images);
    const Observed obs = observe(view, data, cfg);
    const Unit3d& n = view.normal_camera;
    const double zenith = rad2deg(angle_between<double>(n.vec(), -Eigen::Vector3d::UnitZ()));
    std::map<ModelKind, Image<double>> predicted;
    if (write && vi == 0)
      for (auto m : models) predicted[m] = Image<double>::Zero(k.height, k.width);

    for (Eigen::Index r = 0; r < k.height; ++r)
      for (Eigen::Index c = 0; c < k.width; ++c) {
        if (!obs.region(r, c)) continue;
        const Eigen::Vector2d px{static_cast<double>(c), static_cast<double>(r)};
        const Unit3d v = pixel_to_ray(k, px);
        const double measured = obs.aolp.values(r, c);
        const double viewing = rad2deg(viewing_angle(n, v));
        const double radius = (px - Eigen::Vector2d(k.cx, k.cy)).norm() / half_diag;
        const bool has_azimuth = std::hypot(v.x(), v.y()) > 1e-12 && std::hypot(n.x(), n.y()) > 1e-12;
        double az = 0.0;
        if (has_azimuth) {
          az = rad2deg(std::atan2(v.y(), v.x()) - std::atan2(n.y(), n.x()));
          az -= 360.0 * std::floor((az + 180.0) / 360.0);
        }
        for (auto m : models) {
          double pred;
          try {
            pred = predicted_phase(m, n, v);
          } catch (const Error&) {
            ++acc[m].degenerate;
            continue;
          }
          const double err = rad2deg(signed_phase_error(measured, pred));
          auto& a = acc[m];
          a.all.add(err);
          if (radius <= 0.2) a.center.add(std::abs(err));
          if (radius >= 0.8) a.edge.add(std::abs(err));
          a.viewing.add(viewing, err);
          a.d_viewing.add(viewing, err);
          a.zenith.add(zenith, err);
          a.d_zenith.add(zenith, err);
          if (has_azimuth) {
            a.azimuth.add(az, err);
            a.d_azimuth.add(az, err);
          }
          if (!predicted.empty()) predicted[m](r, c) = pred;
          if (pixels) {
            *pixels << vi << c << r << to_string(m) << rad2deg(pred) << rad2deg(measured) << err << viewing
                    << (has_azimuth ? az : 0.0) << zenith;
            pixels->end_row();
          }
        }
      }
    if (!predicted.empty()) {
      for (auto& [m, img] : predicted) io::write_pfm(cfg.out / ("predicted_" + std::string(to_string(m)) + "_view0.pfm"), img);
      io::write_pfm(cfg.out / "measured_aolp_view0.pfm", (obs.region).select(obs.aolp.values, 0.0));
    }
  }

  json summary = {{"views", data.view_count()}};
  std::vector<Check> checks;
  for (auto m : models) {
    const auto& a = acc[m];
    if (a.all.count == 0) throw NoValidPixels("model-accuracy: no pixel passed the DoLP mask");
    summary[to_string(m)] = {{"pixels", a.all.count},
                             {"mean_deg", a.all.mean()},
                             {"rmse_deg", a.all.rmse()},
                             {"mean_abs_deg", a.all.mean_abs()},
                             {"center_mean_abs_deg", a.center.mean_abs()},
                             {"edge_mean_abs_deg", a.edge.mean_abs()},
                             {"center_pixels", a.center.count},
                             {"edge_pixels", a.edge.count},
                             {"degenerate_pixels", a.degenerate}};
  }
  const bool exact = data.source == "synthetic" && !cfg.from_images && cfg.blur_sigma == 0.0 &&
                     data.scene.noise.aolp_sigma == 0.0 && data.scene.noise.intensity_sigma == 0.0;
  if (acc.count(ModelKind::PPA)) {
    const auto& p = acc[ModelKind::PPA];
    if (exact) checks.push_back(Check::less("ppa_rmse_deg_noiseless", p.all.rmse(), 1e-7));
    const double sigma = rad2deg(data.scene.noise.aolp_sigma);
    if (data.source == "synthetic" && !cfg.from_images && cfg.blur_sigma == 0.0 && sigma > 0.0 &&
        data.scene.noise.intensity_sigma == 0.0)
      checks.push_back(Check::less("ppa_rmse_relative_to_noise", std::abs(p.all.rmse() - sigma) / sigma, 0.1));
  }
  if (acc.count(ModelKind::OPA)) {
    const auto& o = acc[ModelKind::OPA];
    if (acc.count(ModelKind::PPA))
      checks.push_back(Check::greater("opa_rmse_exceeds_ppa_deg", o.all.rmse() - acc[ModelKind::PPA].all.rmse(), 0.0));
    if (o.edge.count && o.center.count)
      checks.push_back(Check::greater_equal("opa_edge_minus_center_mean_abs_deg",
                                            o.edge.mean_abs() - o.center.mean_abs(), 0.0));
  }

  json report = make_report("model_accuracy", provenance(data, "model-accuracy", cfg), summary, checks);
  if (write) {
    std::vector<std::pair<std::string, const BinnedStats*>> vb, ab, zb;
    std::vector<std::pair<std::string, const Density2D*>> vd, ad, zd;
    for (auto m : models) {
      const auto& a = acc[m];
      vb.emplace_back(to_string(m), &a.viewing);
      ab.emplace_back(to_string(m), &a.azimuth);
      zb.emplace_back(to_string(m), &a.zenith);
      vd.emplace_back(to_string(m), &a.d_viewing);
      ad.emplace_back(to_string(m), &a.d_azimuth);
      zd.emplace_back(to_string(m), &a.d_zenith);
    }
    write_binned_csv(cfg.out / "bins_viewing_angle.csv", "viewing_angle", vb);
    write_binned_csv(cfg.out / "bins_azimuth_difference.csv", "azimuth_difference", ab);
    write_binned_csv(cfg.out / "bins_zenith.csv", "zenith", zb);
    write_density_csv(cfg.out / "density_viewing_angle.csv", "viewing_angle", vd);
    write_density_csv(cfg.out / "density_azimuth_difference.csv", "azimuth_difference", ad);
    write_density_csv(cfg.out / "density_zenith.csv", "zenith", zd);
    write_report(cfg.out / "report.json", report);
  }
  return report;
}

// ---------------------------------------------------------------- estimation

namespace {

json run_single_view(const Dataset& data, const EvalConfig& cfg) {
  const auto models = cfg.models();
  SolveOptions<double> opts;
  opts.condition_threshold = cfg.condition_threshold;
  std::map<ModelKind, std::vector<double>> errors;
  std::map<ModelKind, int> ill;
  json per_view = json::array();
  std::unique_ptr<CsvWriter> csv;
  if (!cfg.out.empty())
    csv = std::make_unique<CsvWriter>(cfg.out / "views.csv",
                                      std::vector<std::string>{"view", "model", "status", "error_deg", "pixels"});
  for (std::size_t vi = 0; vi < data.view_count(); ++vi) {
    const RenderedView view = data.load_view(vi, cfg.from_images);
    const Observed obs = observe(view, data, cfg);
    for (auto m : models) {
      std::string status = "ok";
      double err = 0.0;
      int pixels = static_cast<int>(obs.region.count());
      try {
        const auto est = estimate_plane_normal_map(obs.aolp, obs.region, data.scene.intrinsics, m, opts);
        err = rad2deg(angle_between<double>(est.normal.vec(), view.normal_camera.vec()));
        errors[m].push_back(err);
        auto rec = estimate_record(est, 1, est.inlier_count);
        rec["view"] = vi;
        rec["model"] = to_string(m);
        rec["error_deg"] = err;
        per_view.push_back(rec);
      } catch (const IllConditioned&) {
        status = "ill_conditioned";
        ++ill[m];
      } catch (const EmptySystem&) {
        status = "empty";
        ++ill[m];
      }
      if (csv) {
        *csv << vi << to_string(m) << status << err << pixels;
        csv->end_row();
      }
    }
  }
  json summary = {{"mode", "single"}, {"per_view", per_view}};
  std::vector<Check> checks;
  const int attempted = static_cast<int>(data.view_count());
  for (auto m : models) summary[to_string(m)] = error_summary(errors[m], ill[m], attempted);
  const bool exact = data.source == "synthetic" && !cfg.from_images && cfg.blur_sigma == 0.0 &&
                     data.scene.noise.aolp_sigma == 0.0 && data.scene.noise.intensity_sigma == 0.0;
  if (errors.count(ModelKind::PPA) && exact) {
    const auto& e = errors[ModelKind::PPA];
    checks.push_back(Check::less("ppa_single_view_max_error_rad", deg2rad(*std::max_element(e.begin(), e.end())), 1e-6));
  }
  if (std::count(models.begin(), models.end(), ModelKind::OPA))
    checks.push_back(Check::greater_equal("opa_single_view_reported_ill_conditioned",
                                          double(ill[ModelKind::OPA]), double(attempted)));
  if (csv) {
    CsvWriter cdf(cfg.out / "cdf.csv", {"model", "views", "error_deg", "fraction"});
    for (auto m : models) write_cdf(cdf, to_string(m), 1, errors[m], attempted);
  }
  return make_report("estimate", provenance(data, "estimate", cfg), summary, checks);
}

/// One randomized multi-view trial: a plane with a random normal, camera
/// poses sampled around it, and a surface point seen by every view.
struct Trial {
  Unit3d normal;
  std::vector<PhaseObservation<double>> obs;
};

Trial make_trial(const Dataset& data, std::size_t views, double sigma, std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const Intrinsicsd& k = data.scene.intrinsics;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Board board = data.scene.board;
    board.center = Eigen::Vector3d::Zero();
    board.normal = Unit3d::normalize(gauss(gen), gauss(gen), gauss(gen));
    Eigen::Vector3d u = board.normal.vec().unitOrthogonal();
    u = Eigen::AngleAxisd(2.0 * kPi<double> * (unit(gen) + 0.5), board.normal.vec()) * u;
    board.axis_u = Unit3d::normalize(u);
    std::vector<Posed> poses;
    try {
      poses = sample_poses(board, k, views, PoseSampling{}, gen());
    } catch (const InfeasiblePoses&) {
      continue;
    }
    // a point on the inner half of the board seen by every view
    const Eigen::Vector3d p = board.point(unit(gen) * board.width_mm / 2, unit(gen) * board.height_mm / 2);
    Trial t;
    t.normal = board.normal;
    bool ok = true;
    for (const auto& pose : poses) {
      const Eigen::Vector3d pc = pose.to_camera(p);
      if (pc.z() <= 0.0) {
        ok = false;
        break;
      }
      PhaseObservation<double> o;
      o.pixel = project(k, pc);
      if (!k.contains(o.pixel)) {
        ok = false;
        break;
      }
      o.intrinsics = k;
      o.pose = pose;
      const auto v = ray_through(k, o.pixel);
      const double noise = gauss(gen) * sigma;
      try {
        o.phase = canonical_phase(ppa_phase(transform_normal(pose, board.normal), v) + noise);
      } catch (const DegenerateRayNormal&) {
        ok = false;
        break;
      }
      t.obs.push_back(o);
    }
    if (ok) return t;
  }
  throw InfeasiblePoses("estimate: could not place a trial point visible in every view");
}

json run_multi_view(const Dataset& data, const EvalConfig& cfg) {
  const auto models = cfg.models();
  const double sigma = deg2rad(cfg.noise_aolp_deg ? *cfg.noise_aolp_deg : rad2deg(data.scene.noise.aolp_sigma));
  std::vector<int> ks;
  if (cfg.sweep_views)
    for (int k = 2; k <= cfg.sweep_max_views; ++k) ks.push_back(k);
  else
    ks.push_back(cfg.views);
  if (ks.front() < 2) throw TooFewViews("estimate: multi-view mode needs at least 2 views");
  const auto max_k = static_cast<std::size_t>(*std::max_element(ks.begin(), ks.end()));
  SolveOptions<double> opts;
  opts.condition_threshold = cfg.condition_threshold;

  // per trial, per K, per model: error in degrees or NaN when ill-conditioned
  const std::size_t n_trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> results(n_trials);
  parallel_for(n_trials, [&](std::size_t t) {
    const Trial trial = make_trial(data, max_k, sigma, cfg.seed, t);
    auto& out = results[t];
    for (int k : ks) {
      const std::vector<PhaseObservation<double>> sub(trial.obs.begin(), trial.obs.begin() + k);
      for (auto m : models) {
        double err = std::numeric_limits<double>::quiet_NaN();
        try {
          const auto est = solve_normal(build_multi_view_system(sub, m), reference_ray(sub), opts);
          err = rad2deg(angle_between<double>(est.normal.vec(), trial.normal.vec()));
        } catch (const IllConditioned&) {
        }
        out.push_back(err);
      }
    }
  });

  std::map<std::pair<int, ModelKind>, std::vector<double>> errors;
  std::map<std::pair<int, ModelKind>, int> ill;
  std::unique_ptr<CsvWriter> csv;
  if (!cfg.out.empty())
    csv = std::make_unique<CsvWriter>(cfg.out / "trials.csv",
                                      std::vector<std::string>{"trial", "views", "model", "status", "error_deg"});
  for (std::size_t t = 0; t < n_trials; ++t) {
    std::size_t i = 0;
    for (int k : ks)
      for (auto m : models) {
        const double e = results[t][i++];
        if (std::isnan(e))
          ++ill[{k, m}];
        else
          errors[{k, m}].push_back(e);
        if (csv) {
          *csv << t << k << to_string(m) << (std::isnan(e) ? "ill_conditioned" : "ok") << (std::isnan(e) ? 0.0 : e);
          csv->end_row();
        }
      }
  }

  json summary = {{"mode", "multi"}, {"trials", cfg.trials}, {"noise_aolp_deg", rad2deg(sigma)}};
  json per_k = json::array();
  for (int k : ks) {
    json entry = {{"views", k}};
    for (auto m : models) entry[to_string(m)] = error_summary(errors[{k, m}], ill[{k, m}], cfg.trials);
    per_k.push_back(entry);
  }
  summary["per_views"] = per_k;
  const int k0 = cfg.sweep_views ? std::clamp(cfg.views, 2, cfg.sweep_max_views) : cfg.views;
  for (auto m : models) summary[to_string(m)] = error_summary(errors[{k0, m}], ill[{k0, m}], cfg.trials);
  summary["reported_views"] = k0;

  std::vector<Check> checks;
  const bool both = models.size() == 2;
  if (both) {
    const auto& p = errors[{k0, ModelKind::PPA}];
    const auto& o = errors[{k0, ModelKind::OPA}];
    checks.push_back(Check::greater("ppa_minus_opa_fraction_below_25deg",
                                    fraction_below(p, kFraction25) - fraction_below(o, kFraction25), 0.0));
    const double om = median(o);
    checks.push_back(Check::less("ppa_over_opa_median_error", om > 0 ? median(p) / om : 1.0, 0.5));
  }
  if (sigma == 0.0 && errors.count({k0, ModelKind::PPA})) {
    const auto& p = errors[{k0, ModelKind::PPA}];
    checks.push_back(Check::less("ppa_multi_view_max_error_rad_noiseless",
                                 p.empty() ? 1.0 : deg2rad(*std::max_element(p.begin(), p.end())), 1e-6));
  }
  if (cfg.sweep_views && std::count(models.begin(), models.end(), ModelKind::PPA)) {
    double worst = -1e300;
    for (std::size_t i = 1; i < ks.size(); ++i) {
      const auto mean = [&](int k) {
        const auto& e = errors[{k, ModelKind::PPA}];
        double s = 0;
        for (double x : e) s += x;
        return e.empty() ? 0.0 : s / double(e.size());
      };
      worst = std::max(worst, mean(ks[i]) - mean(ks[i - 1]));
    }
    checks.push_back(Check::less_equal("ppa_mean_error_max_increase_over_views_deg", worst, 0.5));
  }
  if (csv) {
    CsvWriter cdf(cfg.out / "cdf.csv", {"model", "views", "error_deg", "fraction"});
    for (int k : ks)
      for (auto m : models) write_cdf(cdf, to_string(m), k, errors[{k, m}], cfg.trials);
    CsvWriter curve(cfg.out / "views_curve.csv",
                    {"views", "model", "mean_deg", "median_deg", "fraction_below_25deg", "ill_conditioned"});
    for (int k : ks)
      for (auto m : models) {
        const json s = error_summary(errors[{k, m}], ill[{k, m}], cfg.trials);
        curve << k << to_string(m) << s["mean_deg"].get<double>() << s["median_deg"].get<double>()
              << s["fraction_below_25deg"].get<double>() << ill[{k, m}];
        curve.end_row();
      }
  }
  json notes = json::array({"camera poses are sampled on a spherical cap around each random plane instead of "
                            "being selected from a capture sequence",
                            "correspondences come from the known geometry"});
  return make_report("estimate", provenance(data, "estimate", cfg, notes), summary, checks);
}

}  // namespace

json run_estimate(const Dataset& data, const EvalConfig& cfg) {
  cfg.validate();
  require_ground_truth(data);
  prepare_output(cfg);
  json report = cfg.mode == "single" ? run_single_view(data, cfg) : run_multi_view(data, cfg);
  if (!cfg.out.empty()) write_report(cfg.out / "report.json", report);
  return report;
}

// ---------------------------------------------------------------- contours

namespace {

std::size_t pick_second_view(const Dataset& data, std::size_t ref) {
  const Eigen::Vector3d target = data.scene.board.center;
  const Eigen::Vector3d d_ref = data.scene.poses[ref].center - target;
  double best = -1.0;
  std::size_t best_k = ref;
  for (std::size_t k = 0; k < data.view_count(); ++k) {
    if (k == ref) continue;
    const Posed& p = data.scene.poses[k];
    const Eigen::Vector3d pc = p.to_camera(target);
    if (pc.z() <= 0.0 || !data.scene.intrinsics.contains(project(data.scene.intrinsics, pc))) continue;
    const double a = angle_between<double>(d_ref, p.center - target);
    if (a > best) {
      best = a;
      best_k = k;
    }
  }
  if (best_k == ref || best < deg2rad(20.0))
    throw TooFewViews("contours: no second view with a baseline of at least 20 degrees");
  return best_k;
}

/// World-frame constraint observations from the valid pixels in a square
/// window around `center`.
void window_observations(const Observed& obs, const Intrinsicsd& k, const Posed& pose, const Eigen::Vector2d& center,
                         int half, std::vector<PhaseObservation<double>>& out) {
  const auto cu = static_cast<Eigen::Index>(std::lround(center.x()));
  const auto cv = static_cast<Eigen::Index>(std::lround(center.y()));
  for (Eigen::Index r = cv - half; r <= cv + half; ++r)
    for (Eigen::Index c = cu - half; c <= cu + half; ++c) {
      if (!obs.aolp.valid(r, c)) continue;
      out.push_back({obs.aolp.values(r, c), Eigen::Vector2d(double(c), double(r)), k, pose});
    }
}

void write_contour_csv(const fs::path& path, const Contour3D& c, const Posed& pose, const PlaneModel& plane_cam) {
  CsvWriter csv(path, {"step", "u", "v", "X", "Y", "Z", "point_to_plane_mm"});
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Eigen::Vector3d w = pose.to_world(c.points[i]);
    csv << (static_cast<std::int64_t>(i) - static_cast<std::int64_t>(c.seed_index)) << c.pixel_track[i].x()
        << c.pixel_track[i].y() << w.x() << w.y() << w.z() << plane_cam.signed_distance(c.points[i]);
    csv.end_row();
  }
}

}  // namespace

json run_contours(const Dataset& data, const EvalConfig& cfg) {
  cfg.validate();
  require_ground_truth(data);
  prepare_output(cfg);
  if (data.view_count() < 2) throw TooFewViews("contours: need at least two views");
  if (cfg.ref_view < 0 || static_cast<std::size_t>(cfg.ref_view) >= data.view_count())
    throw std::invalid_argument("contours: reference view out of range");
  const auto ref = static_cast<std::size_t>(cfg.ref_view);
  const std::size_t second = cfg.second_view >= 0 ? static_cast<std::size_t>(cfg.second_view) : pick_second_view(data, ref);
  if (second >= data.view_count() || second == ref) throw std::invalid_argument("contours: invalid second view");

  const Intrinsicsd& k = data.scene.intrinsics;
  const Board& board = data.scene.board;
  const RenderedView view_a = data.load_view(ref, cfg.from_images);
  const RenderedView view_b = data.load_view(second, cfg.from_images);
  const Observed obs_a = observe(view_a, data, cfg);
  const Observed obs_b = observe(view_b, data, cfg);
  const Posed& pose_a = view_a.pose;
  const PlaneModel plane_cam = board.plane().in_camera(pose_a);

  // Seeds sit along the board edge that runs across the iso-depth lines.
  const Eigen::Vector3d iso_dir = board.normal.vec().cross(pose_a.axis_world());
  const Eigen::Vector3d u = board.axis_u.vec(), v = board.axis_v();
  const bool along_u = iso_dir.norm() < 1e-9 || std::abs(iso_dir.normalized().dot(u)) <= std::abs(iso_dir.normalized().dot(v));
  const Eigen::Vector3d edge = along_u ? u : v, across = along_u ? v : u;
  const double edge_len = along_u ? board.width_mm : board.height_mm;
  const double across_len = along_u ? board.height_mm : board.width_mm;

  double sq_opa = 0.0, sq_ppa = 0.0;
  std::int64_t n_points = 0;
  int used = 0, skipped = 0;
  json per_seed = json::array();
  std::unique_ptr<CsvWriter> seeds_csv;
  if (!cfg.out.empty())
    seeds_csv = std::make_unique<CsvWriter>(
        cfg.out / "contours" / "seeds.csv",
        std::vector<std::string>{"seed", "points", "opa_rmse_mm", "ppa_rmse_mm", "normal_error_deg", "rows"});
  for (int i = 0; i < cfg.seeds; ++i) {
    const double s = cfg.seeds == 1 ? 0.0 : -0.4 + 0.8 * double(i) / double(cfg.seeds - 1);
    const Eigen::Vector3d p_world = board.center + s * edge_len * edge - (0.45 * across_len) * across;
    const Eigen::Vector3d p_cam = pose_a.to_camera(p_world);
    const Eigen::Vector2d seed_px = project(k, p_cam);
    if (p_cam.z() <= 0.0 || !sample_phase_bilinear(obs_a.aolp, seed_px)) {
      ++skipped;
      continue;
    }
    const Contour3D iso = trace_iso_depth(obs_a.aolp, seed_px, p_cam.z(), k, cfg.step_px);

    std::vector<PhaseObservation<double>> rows;
    window_observations(obs_a, k, pose_a, seed_px, cfg.window, rows);
    const Eigen::Vector3d p_b = view_b.pose.to_camera(p_world);
    if (p_b.z() > 0.0) window_observations(obs_b, k, view_b.pose, project(k, p_b), cfg.window, rows);
    NormalEstimate<double> est;
    try {
      SolveOptions<double> opts;
      opts.condition_threshold = cfg.condition_threshold;
      est = solve_normal(build_multi_view_system(rows, ModelKind::PPA), reference_ray(rows), opts);
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    const Unit3d n_cam = transform_normal(pose_a, est.normal);
    const Contour3D ppa =
        trace_ppa(iso.pixel_track, iso.seed_index, p_cam, [&](std::size_t) { return n_cam; }, k);

    const double r_opa = plane_rmse(iso, plane_cam), r_ppa = plane_rmse(ppa, plane_cam);
    sq_opa += r_opa * r_opa * double(iso.size());
    sq_ppa += r_ppa * r_ppa * double(ppa.size());
    n_points += static_cast<std::int64_t>(iso.size());
    const double n_err = rad2deg(angle_between<double>(est.normal.vec(), board.normal.vec()));
    per_seed.push_back({{"seed", i}, {"points", iso.size()}, {"opa_rmse_mm", r_opa}, {"ppa_rmse_mm", r_ppa},
                        {"normal_error_deg", n_err}});
    if (!cfg.out.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "seed_%02d", i);
      write_contour_csv(cfg.out / "contours" / (std::string(name) + "_opa.csv"), iso, pose_a, plane_cam);
      write_contour_csv(cfg.out / "contours" / (std::string(name) + "_ppa.csv"), ppa, pose_a, plane_cam);
      *seeds_csv << i << iso.size() << r_opa << r_ppa << n_err << rows.size();
      seeds_csv->end_row();
    }
    ++used;
  }
  if (used == 0) throw SeedMasked("contours: every seed falls outside the valid mask");

  const double rmse_opa = std::sqrt(sq_opa / double(n_points));
  const double rmse_ppa = std::sqrt(sq_ppa / double(n_points));
  const double ratio = rmse_opa > 0.0 ? rmse_ppa / rmse_opa : 0.0;
  json summary = {{"reference_view", ref},   {"second_view", second},    {"seeds_used", used},
                  {"seeds_skipped", skipped}, {"points", n_points},       {"opa_rmse_mm", rmse_opa},
                  {"ppa_rmse_mm", rmse_ppa},  {"ppa_over_opa_rmse", ratio}, {"per_seed", per_seed}};
  std::vector<Check> checks;
  const bool noiseless = data.scene.noise.aolp_sigma == 0.0 && data.scene.noise.intensity_sigma == 0.0;
  const bool exact = data.source == "synthetic" && !cfg.from_images && cfg.blur_sigma == 0.0 && noiseless;
  if (exact) checks.push_back(Check::less("ppa_contour_rmse_mm_noiseless", rmse_ppa, 1e-6));
  if (noiseless)
    checks.push_back(Check::less("ppa_minus_opa_contour_rmse_mm", rmse_ppa - rmse_opa, 0.0));
  else
    checks.push_back(Check::less_equal("ppa_over_opa_contour_rmse", ratio, 0.25));

  json notes = json::array({"seed depths are taken from the known board plane"});
  json report = make_report("contours", provenance(data, "contours", cfg, notes), summary, checks);
  if (!cfg.out.empty()) write_report(cfg.out / "report.json", report);
  return report;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::vector<fs::path>& inputs, const fs::path& out) {
  std::vector<json> reports;
  for (const auto& p : inputs) reports.push_back(read_report(p));
  const json merged = merge_reports(reports);
  if (!out.empty()) {
    write_report(out / "report.json", merged);
    CsvWriter csv(out / "checks.csv", {"source", "name", "passed", "value", "comparison", "threshold"});
    for (const auto& c : merged["checks"]) {
      csv << c.value("source", merged["kind"].get<std::string>()) << c["name"].get<std::string>()
          << (c["passed"].get<bool>() ? "true" : "false") << c["value"].get<double>()
          << c.value("comparison", "") << c["threshold"].get<double>();
      csv.end_row();
    }
  }
  return all_checks_pass(merged) ? 0 : 1;
}

}  // namespace ppa::eval
