#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pqproj/error.hpp"
#include "pqproj/pq_struct.hpp"

namespace pqproj::cli {

using Json = nlohmann::ordered_json;

/// Missing or mistyped field in a scene file.
class SceneFileError : public Error {
public:
    using Error::Error;
};

/// Scene document: name, notes, dimension, epsilon, coords, domain {min, max}, g, gbar, P, Q.
Json scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const nlohmann::json& doc);

/// Canonical text: two-space indented JSON with a trailing newline.
std::string serialize_scene(const SceneSpec& spec);
SceneSpec parse_scene(std::string_view text);
SceneSpec read_scene_file(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical text, as "fnv1a64:<16 hex digits>".
std::string scene_digest(const SceneSpec& spec);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace pqproj::cli
