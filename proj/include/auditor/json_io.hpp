#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace auditor {

using json = nlohmann::json;

/// Reads a whole file as bytes. Throws IoFailure.
std::string read_text_file(const std::filesystem::path& path);

/// Parses a JSON file. Throws IoFailure when unreadable, SchemaViolation when not JSON.
json read_json_file(const std::filesystem::path& path);

/// Writes via a sibling temp file + rename so readers never observe a partial file.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Canonical dump: sorted keys (nlohmann object ordering), 2-space indent, trailing newline.
std::string dump_canonical(const json& doc);

void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace auditor
