#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace corpus_mixer {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.1.0";

// Name of the only field that may differ between two runs with identical
// inputs. It lives under "metadata" in every JSON artifact.
inline constexpr std::string_view kTimestampField = "created_at";

json read_json_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_json_atomic(const std::filesystem::path& path, const json& doc);

// {"tool_version", "created_at"}; created_at honours SOURCE_DATE_EPOCH.
json artifact_metadata();

// Drops metadata.created_at (recursively) so artifacts can be compared.
json strip_timestamps(json doc);

// Expands a shell glob; a pattern without wildcards is returned as-is.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace corpus_mixer
