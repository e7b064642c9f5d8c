#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "auditor/json_io.hpp"

namespace auditor::kb {

enum class Domain { EnterpriseIT, IndustrialOT, Hybrid };
enum class Granularity { FlowLevel, PacketLevel, ProcessTelemetry, Mixed };

std::string_view to_string(Domain d);
std::string_view to_string(Granularity g);
Domain domain_from_string(std::string_view s);
Granularity granularity_from_string(std::string_view s);

struct DatasetProfile {
    std::string name;
    int year = 0;
    Domain domain = Domain::EnterpriseIT;
    std::vector<std::string> industrial_protocols;
    std::vector<std::string> enterprise_protocols;
    /// Free-text tags, ideally from recommended_attack_classes().
    std::vector<std::string> attack_classes;
    long long scenario_count = 0;
    Granularity feature_granularity = Granularity::FlowLevel;
    std::vector<std::string> limitations;
    /// Fields not part of the schema, kept as-is.
    json annotations = json::object();

    friend bool operator==(const DatasetProfile&, const DatasetProfile&) = default;
};

struct KnowledgeBase {
    std::string schema_version = "1";
    std::vector<DatasetProfile> profiles;

    const DatasetProfile* find(std::string_view name) const;

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;
};

const std::vector<std::string>& recommended_attack_classes();

/// Human-readable problems; empty when the profile is valid.
std::vector<std::string> validate_profile(const DatasetProfile& profile);

/// Throws SchemaViolation (bad shape, enum or invariant) or DuplicateName.
DatasetProfile profile_from_json(const json& j);
KnowledgeBase kb_from_json(const json& j);
KnowledgeBase load_profiles(const std::filesystem::path& path);

json to_json(const DatasetProfile& p);
json to_json(const KnowledgeBase& kb);

/// Stable hash of a profile's canonical JSON; changes whenever any field does.
std::string profile_hash(const DatasetProfile& p);

}  // namespace auditor::kb
