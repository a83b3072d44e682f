#pragma once

#include <filesystem>

#include <json.hpp>

#include "steerbeam/scene.hpp"

namespace steerbeam {

// Scene description files (JSON). See docs/scene_format.md for the schema.
// Errors are SceneError with the offending field path, e.g.
// "sources[1].role: expected one of target, interferer, noise".
// Relative WAV paths are resolved against base_dir.
Scene parse_scene(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scene load_scene(const std::filesystem::path& path);

// Fully resolved scene with every default written out.
nlohmann::json scene_to_json(const Scene& scene);

}  // namespace steerbeam
