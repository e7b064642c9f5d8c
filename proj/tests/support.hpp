#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include <json.hpp>

namespace testing {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline fs::path fixture(const std::string& relative)
{
    return fs::path(AUDITOR_FIXTURE_DIR) / relative;
}

inline fs::path data_file(const std::string& relative)
{
    return fs::path(AUDITOR_DATA_DIR) / relative;
}

/// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("auditor-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

// Minimal STIX object builders for hand-made bundles.

inline json attack_pattern(const std::string& attack_id, const std::string& name,
                           std::vector<std::string> data_sources = {}, const std::string& source = "mitre-attack")
{
    json o{{"type", "attack-pattern"},
           {"id", "attack-pattern--" + attack_id},
           {"name", name},
           {"external_references", json::array({{{"source_name", source}, {"external_id", attack_id}}})}};
    if (!data_sources.empty()) o["x_mitre_data_sources"] = data_sources;
    return o;
}

inline json entity(const std::string& type, const std::string& attack_id, const std::string& name = "entity")
{
    return json{{"type", type},
                {"id", type + "--" + attack_id},
                {"name", name},
                {"external_references", json::array({{{"source_name", "mitre-attack"}, {"external_id", attack_id}}})}};
}

inline json uses(const json& source, const json& target)
{
    static int n = 0;
    return json{{"type", "relationship"},
                {"id", "relationship--" + std::to_string(n++)},
                {"relationship_type", "uses"},
                {"source_ref", source.at("id")},
                {"target_ref", target.at("id")}};
}

inline std::string bundle(std::initializer_list<json> objects)
{
    json list = json::array();
    for (const auto& o : objects) list.push_back(o);
    return json{{"type", "bundle"}, {"id", "bundle--test"}, {"objects", list}}.dump();
}

}  // namespace testing
