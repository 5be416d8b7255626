#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "ppa/synthetic.hpp"

namespace ppa::eval {

using json = nlohmann::json;

json to_json(const Intrinsicsd& k);
Intrinsicsd intrinsics_from_json(const json& j);
/// {"rotation": 9 row-major world-to-camera entries, "center": [x, y, z]}.
json to_json(const Posed& pose);
Posed pose_from_json(const json& j);
json to_json(const Board& board);
Board board_from_json(const json& j);
json to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const json& j);

/// 64-bit FNV-1a of the compact JSON text, as 16 hex digits.
std::string config_hash(const json& config);

std::string view_dir_name(std::size_t k);

/// Dataset on disk: scene.json plus one directory per view. Synthetic
/// datasets carry their full SceneSpec and are re-rendered in memory by
/// default, which keeps the ground truth exact; captures (and synthetic
/// datasets with `from_images`) are read from the view directories.
struct Dataset {
  std::filesystem::path root;
  std::string source = "synthetic";
  SceneSpec scene;
  std::string hash;

  std::size_t view_count() const { return scene.poses.size(); }
  bool has_ground_truth() const { return has_board; }
  RenderedView load_view(std::size_t k, bool from_images = false) const;

  bool has_board = true;
};

Dataset open_dataset(const std::filesystem::path& root);

/// In-memory dataset for a scene that is never written to disk.
Dataset memory_dataset(const SceneSpec& spec);

/// Writes scene.json, manifest.json and every view directory.
void write_dataset(const SceneSpec& spec, const std::filesystem::path& root, const json& config);

}  // namespace ppa::eval
