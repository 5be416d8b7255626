#include "ppa/eval/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "ppa/errors.hpp"
#include "ppa/image_io.hpp"

namespace ppa::eval {

namespace fs = std::filesystem;

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

const char* dolp_mode_name(DolpMode m) { return m == DolpMode::Constant ? "constant" : "specular_fresnel"; }

}  // namespace

json to_json(const Intrinsicsd& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsicsd intrinsics_from_json(const json& j) {
  try {
    Intrinsicsd k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.validate();
    return k;
  } catch (const json::exception& e) {
    throw FormatError(std::string("intrinsics: ") + e.what());
  }
}

json to_json(const Posed& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation(i, j));
  return {{"rotation", r}, {"center", vec3(pose.center)}};
}

Posed pose_from_json(const json& j) {
  try {
    Posed p;
    const auto& r = j.at("rotation");
    if (!r.is_array() || r.size() != 9) throw FormatError("pose: rotation needs 9 entries");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) p.rotation(i, k) = r[3 * i + k].get<double>();
    p.center = vec3_from(j.at("center"));
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("pose: ") + e.what());
  }
}

json to_json(const Board& b) {
  return {{"center", vec3(b.center)},
          {"normal", vec3(b.normal.vec())},
          {"axis_u", vec3(b.axis_u.vec())},
          {"width_mm", b.width_mm},
          {"height_mm", b.height_mm}};
}

Board board_from_json(const json& j) {
  try {
    Board b;
    b.center = vec3_from(j.at("center"));
    b.normal = Unit3d::from_unit(vec3_from(j.at("normal")));
    b.axis_u = Unit3d::from_unit(vec3_from(j.at("axis_u")));
    b.width_mm = j.at("width_mm").get<double>();
    b.height_mm = j.at("height_mm").get<double>();
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("board: ") + e.what());
  }
}

json to_json(const SceneSpec& s) {
  json poses = json::array();
  for (const auto& p : s.poses) poses.push_back(to_json(p));
  return {{"source", "synthetic"},
          {"board", to_json(s.board)},
          {"intrinsics", to_json(s.intrinsics)},
          {"poses", poses},
          {"dolp_mode", dolp_mode_name(s.dolp_mode)},
          {"dolp_constant", s.dolp_constant},
          {"refractive_index", s.refractive_index},
          {"aolp_shift", s.aolp_shift},
          {"intensity_avg", s.intensity_avg},
          {"ambient_floor", s.ambient_floor},
          {"background", s.background},
          {"noise", {{"intensity_sigma", s.noise.intensity_sigma}, {"aolp_sigma", s.noise.aolp_sigma}}},
          {"seed", s.seed}};
}

SceneSpec scene_from_json(const json& j) {
  try {
    SceneSpec s;
    s.board = board_from_json(j.at("board"));
    s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    for (const auto& p : j.value("poses", json::array())) s.poses.push_back(pose_from_json(p));
    const std::string mode = j.value("dolp_mode", "constant");
    if (mode == "constant")
      s.dolp_mode = DolpMode::Constant;
    else if (mode == "specular_fresnel")
      s.dolp_mode = DolpMode::SpecularFresnel;
    else
      throw FormatError("scene: unknown dolp_mode " + mode);
    s.dolp_constant = j.value("dolp_constant", s.dolp_constant);
    s.refractive_index = j.value("refractive_index", s.refractive_index);
    s.aolp_shift = j.value("aolp_shift", s.aolp_shift);
    s.intensity_avg = j.value("intensity_avg", s.intensity_avg);
    s.ambient_floor = j.value("ambient_floor", s.ambient_floor);
    s.background = j.value("background", s.background);
    if (j.contains("noise")) {
      s.noise.intensity_sigma = j["noise"].value("intensity_sigma", 0.0);
      s.noise.aolp_sigma = j["noise"].value("aolp_sigma", 0.0);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene: ") + e.what());
  }
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string view_dir_name(std::size_t k) { return "view_" + std::to_string(k); }

RenderedView Dataset::load_view(std::size_t k, bool from_images) const {
  if (k >= view_count()) throw std::out_of_range("dataset: view index out of range");
  if (source == "synthetic" && !from_images) return render_view(scene, k);

  const fs::path dir = root / view_dir_name(k);
  RenderedView v;
  v.pose = pose_from_json(read_json(dir / "pose.json"));
  v.frame.intrinsics = scene.intrinsics;
  v.frame.i0 = io::read_png(dir / "i0.png");
  v.frame.i45 = io::read_png(dir / "i45.png");
  v.frame.i90 = io::read_png(dir / "i90.png");
  v.frame.i135 = io::read_png(dir / "i135.png");
  v.frame.validate();
  if (v.frame.i0.rows() != scene.intrinsics.height || v.frame.i0.cols() != scene.intrinsics.width)
    throw FormatError("dataset: image size differs from the intrinsics in " + dir.string());
  v.normal_world = scene.board.normal;
  v.normal_camera = transform_normal(v.pose, scene.board.normal);

  const bool gt = fs::exists(dir / "gt_aolp.pfm") && fs::exists(dir / "mask.png");
  if (gt) {
    const Mask mask = io::read_mask_png(dir / "mask.png");
    for (auto [map, name] : {std::pair{&v.gt_aolp, "gt_aolp.pfm"}, {&v.gt_dolp, "gt_dolp.pfm"}, {&v.gt_depth, "gt_depth.pfm"}}) {
      if (!fs::exists(dir / name)) continue;
      map->values = io::read_pfm(dir / name);
      map->mask = mask;
    }
  } else {
    // without rendered ground truth, the board footprint is the region of interest
    v.gt_aolp = v.gt_dolp = v.gt_depth = ScalarMap<double>(scene.intrinsics.height, scene.intrinsics.width);
    const PlaneModel plane = scene.board.plane();
    const Eigen::Matrix3d to_world = v.pose.rotation.transpose();
    for (Eigen::Index r = 0; r < scene.intrinsics.height; ++r)
      for (Eigen::Index c = 0; c < scene.intrinsics.width; ++c) {
        const Eigen::Vector3d d = to_world * ray_through(scene.intrinsics, Eigen::Vector2d(c, r)).vec();
        const auto t = plane.intersect(v.pose.center, d);
        if (!t || !scene.board.contains(v.pose.center + *t * d)) continue;
        v.gt_depth.values(r, c) = *t * (v.pose.rotation.row(2).dot(d));
        v.gt_aolp.mask(r, c) = v.gt_dolp.mask(r, c) = v.gt_depth.mask(r, c) = true;
      }
  }
  return v;
}

Dataset open_dataset(const fs::path& root) {
  const json scene = read_json(root / "scene.json");
  Dataset d;
  d.root = root;
  d.source = scene.value("source", "synthetic");
  if (d.source != "synthetic" && d.source != "capture") throw FormatError("scene.json: unknown source " + d.source);
  d.has_board = scene.contains("board");
  if (!d.has_board) {
    // captures without a measured board plane can still be loaded, but
    // nothing can be scored against them
    json patched = scene;
    patched["board"] = to_json(Board{});
    d.scene = scene_from_json(patched);
  } else {
    d.scene = scene_from_json(scene);
  }
  if (d.source == "capture") {
    d.scene.poses.clear();
    for (std::size_t k = 0; fs::exists(root / view_dir_name(k) / "pose.json"); ++k)
      d.scene.poses.push_back(pose_from_json(read_json(root / view_dir_name(k) / "pose.json")));
  }
  if (d.scene.poses.empty()) throw FormatError("dataset has no views: " + root.string());
  d.hash = fs::exists(root / "manifest.json") ? read_json(root / "manifest.json").value("config_hash", "")
                                               : config_hash(scene);
  return d;
}

Dataset memory_dataset(const SceneSpec& spec) {
  Dataset d;
  d.scene = spec;
  d.hash = config_hash(to_json(spec));
  return d;
}

void write_dataset(const SceneSpec& spec, const fs::path& root, const json& config) {
  spec.validate();
  fs::create_directories(root);
  write_json(root / "scene.json", to_json(spec));
  for (std::size_t k = 0; k < spec.poses.size(); ++k) {
    const auto view = render_view(spec, k);
    const fs::path dir = root / view_dir_name(k);
    fs::create_directories(dir);
    io::write_png16(dir / "i0.png", view.frame.i0);
    io::write_png16(dir / "i45.png", view.frame.i45);
    io::write_png16(dir / "i90.png", view.frame.i90);
    io::write_png16(dir / "i135.png", view.frame.i135);
    io::write_pfm(dir / "gt_aolp.pfm", view.gt_aolp.values);
    io::write_pfm(dir / "gt_dolp.pfm", view.gt_dolp.values);
    io::write_pfm(dir / "gt_depth.pfm", view.gt_depth.values);
    io::write_mask_png(dir / "mask.png", view.gt_aolp.mask);
    write_json(dir / "pose.json", to_json(view.pose));
  }
  json manifest = {{"schema_version", "1.0.0"},
                   {"config", config},
                   {"config_hash", config_hash(config)},
                   {"views", spec.poses.size()},
                   {"layout",
                    {"view_<k>/i0.png", "view_<k>/i45.png", "view_<k>/i90.png", "view_<k>/i135.png",
                     "view_<k>/gt_aolp.pfm", "view_<k>/gt_dolp.pfm", "view_<k>/gt_depth.pfm", "view_<k>/mask.png",
                     "view_<k>/pose.json"}}};
  write_json(root / "manifest.json", manifest);
}

}  // namespace ppa::eval
