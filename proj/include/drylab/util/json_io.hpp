#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace drylab::util {

using json = nlohmann::json;

/// Read and parse a JSON file. Throws drylab::Error with the path on failure.
json read_json_file(const std::filesystem::path& path);

/// Serialize with a stable 2-space layout and write atomically
/// (temp file + rename). Parent directories are created.
void write_json_file(const std::filesystem::path& path, const json& value);

/// Write text atomically.
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace drylab::util
