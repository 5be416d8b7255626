#include <doctest.h>

#include <complex>

#include "ppa/angles.hpp"
#include "ppa/errors.hpp"
#include "ppa/normal_estimation.hpp"
#include "ppa/synthetic.hpp"
#include "test_support.hpp"

using namespace ppa;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

// Independent oracle from the Fresnel power reflectances.
double fresnel_dolp(double theta, double eta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta) / eta;
  const double cr = std::sqrt(1 - st * st);
  const double rs = (ct - eta * cr) / (ct + eta * cr);
  const double rp = (cr - eta * ct) / (cr + eta * ct);
  const double Rs = rs * rs, Rp = rp * rp;
  return (Rs - Rp) / (Rs + Rp);
}

}  // namespace

TEST_CASE("specular_dolp") {
  CHECK(specular_dolp(0.0, 1.5) == 0.0);
  const double brewster = std::atan(1.5);
  CHECK(rad2deg(brewster) == doctest::Approx(56.31).epsilon(1e-4));
  CHECK(specular_dolp(brewster, 1.5) == doctest::Approx(1.0).epsilon(1e-12));
  const double at30 = specular_dolp(deg2rad(30.0), 1.5);
  CHECK(at30 > 0.0);
  CHECK(at30 < 1.0);
  CHECK(at30 == doctest::Approx(fresnel_dolp(deg2rad(30.0), 1.5)).epsilon(1e-12));
  for (double eta : {1.3, 1.5, 1.8})
    for (double deg = 0.5; deg < 89.5; deg += 0.5) {
      const double z = deg2rad(deg);
      CHECK(specular_dolp(z, eta) == doctest::Approx(fresnel_dolp(z, eta)).epsilon(1e-10));
      CHECK(std::abs(specular_dolp(z + 1e-7, eta) - specular_dolp(z, eta)) < 1e-5);
    }
}

TEST_CASE("render_view examples") {
  SUBCASE("fronto-parallel plane: the principal ray is degenerate and masked") {
    SceneSpec spec;
    spec.intrinsics = Intrinsicsd::from_fov(641, 481, deg2rad(86.6));
    REQUIRE(spec.intrinsics.cx == 320.0);
    REQUIRE(spec.intrinsics.cy == 240.0);
    spec.poses = {look_at(Vector3d(0, 0, 500), Vector3d::Zero(), Vector3d::UnitX())};
    const auto view = render_view(spec, 0);
    CHECK(test::near(view.normal_camera.vec(), Vector3d(0, 0, -1), 1e-15));
    CHECK_FALSE(view.gt_aolp.mask(240, 320));
    CHECK(view.gt_aolp.mask(240, 321));
    CHECK(view.gt_depth.values(240, 321) == doctest::Approx(500.0));
  }
  SUBCASE("tilted plane at a chosen pixel") {
    SceneSpec spec;
    spec.intrinsics.fx = spec.intrinsics.fy = 100;
    spec.intrinsics.cx = spec.intrinsics.cy = 100;
    spec.intrinsics.width = spec.intrinsics.height = 201;
    spec.board.width_mm = spec.board.height_mm = 4000;
    Posed pose;
    pose.rotation = rotation_exp(Unit3d::normalize(1, 0, 0), deg2rad(-135.0));
    pose.center = Vector3d(0, 0, 500);
    spec.poses = {pose};
    const auto view = render_view(spec, 0);
    const double h = std::sqrt(0.5);
    CHECK(test::near(view.normal_camera.vec(), Vector3d(0, h, -h), 1e-15));
    // pixel (200, 100) looks along (1, 0, 1) / sqrt 2
    CHECK(test::near(pixel_to_ray(spec.intrinsics, Vector2d(200, 100)).vec(), Vector3d(h, 0, h), 1e-15));
    REQUIRE(view.gt_aolp.mask(100, 200));
    // the plane of incidence cuts the image plane along (1, 1): phase -pi/4 mod pi
    CHECK(view.gt_aolp.values(100, 200) == doctest::Approx(3 * kPi<double> / 4).epsilon(1e-14));
    spec.aolp_shift = kPi<double> / 2;
    CHECK(render_view(spec, 0).gt_aolp.values(100, 200) == doctest::Approx(kPi<double> / 4).epsilon(1e-14));
  }
  SUBCASE("camera facing away from the board") {
    SceneSpec spec;
    spec.intrinsics = default_intrinsics();
    spec.poses = {look_at(Vector3d(0, 0, 500), Vector3d(0, 0, 1000), Vector3d::UnitX())};
    CHECK_THROWS_AS(render_view(spec, 0), PlaneBehindCamera);
  }
  SUBCASE("camera behind the board") {
    SceneSpec spec;
    spec.intrinsics = default_intrinsics();
    spec.poses = {look_at(Vector3d(0, 0, -500), Vector3d::Zero(), Vector3d::UnitX())};
    CHECK_THROWS_AS(render_view(spec, 0), std::invalid_argument);
  }
}

TEST_CASE("rendered layers are consistent") {
  auto spec = test::tilted_scene(deg2rad(30.0), 300.0);
  const auto view = render_view(spec, 0);
  const auto& k = spec.intrinsics;
  CHECK((view.gt_aolp.mask == view.gt_dolp.mask).all());
  CHECK((view.gt_aolp.mask == view.gt_depth.mask).all());
  CHECK(view.gt_aolp.valid_count() > 100000);
  double worst = 0;
  for (Eigen::Index r = 0; r < k.height; ++r)
    for (Eigen::Index c = 0; c < k.width; ++c) {
      if (!view.gt_depth.valid(r, c)) continue;
      const double phi = view.gt_aolp.values(r, c);
      CHECK(phi >= 0.0);
      CHECK(phi < kPi<double>);
      const double z = view.gt_depth.values(r, c);
      CHECK(z > 0.0);
      const Vector3d p = back_project(k, Vector2d(c, r), z);
      worst = std::max(worst, (project(k, p) - Vector2d(c, r)).norm());
      // the back-projected point lies on the board
      CHECK(std::abs(spec.board.plane().signed_distance(view.pose.to_world(p))) < 1e-9);
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("noiseless frames reproduce the ground-truth phase") {
  auto spec = test::tilted_scene(deg2rad(50.0), 450.0);
  const auto view = render_view(spec, 0);
  const auto state = extract_state(compute_stokes(view.frame), 0.1);
  for (Eigen::Index r = 0; r < spec.intrinsics.height; ++r)
    for (Eigen::Index c = 0; c < spec.intrinsics.width; ++c) {
      if (!view.gt_aolp.valid(r, c)) continue;
      REQUIRE(state.aolp.mask(r, c));
      CHECK(phase_distance(state.aolp.values(r, c), view.gt_aolp.values(r, c)) < 1e-9);
    }
}

TEST_CASE("the ambient floor drives DoLP below the threshold") {
  auto spec = test::tilted_scene(deg2rad(30.0));
  spec.dolp_constant = 0.5;
  spec.ambient_floor = 3.0 * spec.intensity_avg;  // 0.5 / 4 = 0.125
  auto state = extract_state(compute_stokes(render_view(spec, 0).frame), 0.1);
  CHECK(state.aolp.valid_count() > 0);
  spec.ambient_floor = 5.0 * spec.intensity_avg;  // 0.5 / 6 < 0.1
  const auto view = render_view(spec, 0);
  state = extract_state(compute_stokes(view.frame), 0.1);
  CHECK(state.aolp.valid_count() == 0);
  CHECK(view.gt_dolp.values.maxCoeff() == doctest::Approx(0.5 / 6));
}

TEST_CASE("rendering is deterministic and independent of the thread count") {
  auto spec = default_scene(2, 17);
  spec.noise.intensity_sigma = 0.01;
  spec.noise.aolp_sigma = deg2rad(2.0);
  ::setenv("PPA_NUM_THREADS", "1", 1);
  const auto a = render_view(spec, 1);
  ::setenv("PPA_NUM_THREADS", "4", 1);
  const auto b = render_view(spec, 1);
  ::unsetenv("PPA_NUM_THREADS");
  CHECK((a.frame.i0 == b.frame.i0).all());
  CHECK((a.frame.i45 == b.frame.i45).all());
  CHECK((a.frame.i90 == b.frame.i90).all());
  CHECK((a.frame.i135 == b.frame.i135).all());
  CHECK((a.gt_aolp.values == b.gt_aolp.values).all());
  spec.seed = 18;
  CHECK_FALSE((render_view(spec, 1).frame.i0 == a.frame.i0).all());
}

TEST_CASE("sample_poses") {
  const Board board;
  const auto k = default_intrinsics();
  SUBCASE("zero angular range gives a fronto pose at the requested distance") {
    PoseSampling r;
    r.min_distance_mm = r.max_distance_mm = 600;
    r.max_tilt = 0;
    const auto poses = sample_poses(board, k, 1, r, 1);
    REQUIRE(poses.size() == 1);
    CHECK(test::near(poses[0].center, Vector3d(0, 0, 600), 1e-12));
    CHECK(test::near(poses[0].axis_world(), Vector3d(0, 0, -1), 1e-12));
  }
  SUBCASE("seeded and deterministic") {
    const auto a = sample_poses(board, k, 20, PoseSampling{}, 9);
    const auto b = sample_poses(board, k, 20, PoseSampling{}, 9);
    const auto c = sample_poses(board, k, 20, PoseSampling{}, 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].rotation == b[i].rotation);
      CHECK(a[i].center == b[i].center);
    }
    CHECK(a[0].center != c[0].center);
  }
  SUBCASE("282 poses all see at least half of the board within range") {
    const PoseSampling r;
    const auto poses = sample_poses(board, k, 282, r, 7);
    CHECK(poses.size() == 282);
    for (const auto& p : poses) {
      CHECK(board_visibility(board, k, p) >= 0.5);
      const Vector3d d = p.center - board.center;
      CHECK(d.norm() >= r.min_distance_mm - 1e-9);
      CHECK(d.norm() <= r.max_distance_mm + 1e-9);
      CHECK(ppa::angle_between<double>(d, board.normal.vec()) <= r.max_tilt + 1e-12);
      CHECK_NOTHROW(p.validate());
    }
  }
  SUBCASE("infeasible ranges") {
    PoseSampling r;
    r.min_distance_mm = 800;
    r.max_distance_mm = 350;
    CHECK_THROWS_AS(sample_poses(board, k, 1, r, 1), InfeasiblePoses);
    r = PoseSampling{};
    r.min_distance_mm = r.max_distance_mm = 5;  // far too close to see half the board
    CHECK_THROWS_AS(sample_poses(board, k, 1, r, 1), InfeasiblePoses);
    CHECK_THROWS_AS(sample_poses(board, k, 0, PoseSampling{}, 1), std::invalid_argument);
  }
}

TEST_CASE("render, extract and solve recovers the plane normal") {
  auto spec = default_scene(3, 23);
  for (std::size_t i = 0; i < spec.poses.size(); ++i) {
    const auto view = render_view(spec, i);
    auto state = extract_state(compute_stokes(view.frame), 0.1);
    // undo the specular offset between polarization direction and phase
    for (Eigen::Index r = 0; r < state.aolp.rows(); ++r)
      for (Eigen::Index c = 0; c < state.aolp.cols(); ++c)
        state.aolp.values(r, c) = canonical_phase(state.aolp.values(r, c) - spec.aolp_shift);
    const auto est = estimate_plane_normal_map(state.aolp, view.gt_aolp.mask, spec.intrinsics);
    CHECK(test::angle_between(est.normal, view.normal_camera) < 1e-6);
  }
}
