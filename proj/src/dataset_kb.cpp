#include "auditor/dataset_kb.hpp"

#include "auditor/errors.hpp"
#include "auditor/hashing.hpp"

#include <fmt/format.h>

#include <set>

namespace auditor::kb {

namespace {

const std::set<std::string>& schema_fields()
{
    static const std::set<std::string> fields{
        "name",           "year",         "domain",      "industrial_protocols", "enterprise_protocols",
        "attack_classes", "scenario_count", "feature_granularity", "limitations",
    };
    return fields;
}

template <typename T>
T required(const json& j, const char* key, const std::string& who)
{
    auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaViolation(who + ": missing required field \"" + key + "\"");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw SchemaViolation(who + ": field \"" + key + "\" has the wrong type");
    }
}

}  // namespace

std::string_view to_string(Domain d)
{
    switch (d) {
        case Domain::EnterpriseIT: return "EnterpriseIT";
        case Domain::IndustrialOT: return "IndustrialOT";
        case Domain::Hybrid: return "Hybrid";
    }
    return "EnterpriseIT";
}

std::string_view to_string(Granularity g)
{
    switch (g) {
        case Granularity::FlowLevel: return "FlowLevel";
        case Granularity::PacketLevel: return "PacketLevel";
        case Granularity::ProcessTelemetry: return "ProcessTelemetry";
        case Granularity::Mixed: return "Mixed";
    }
    return "FlowLevel";
}

Domain domain_from_string(std::string_view s)
{
    if (s == "EnterpriseIT") return Domain::EnterpriseIT;
    if (s == "IndustrialOT") return Domain::IndustrialOT;
    if (s == "Hybrid") return Domain::Hybrid;
    throw SchemaViolation("unknown domain '" + std::string(s) + "'");
}

Granularity granularity_from_string(std::string_view s)
{
    if (s == "FlowLevel") return Granularity::FlowLevel;
    if (s == "PacketLevel") return Granularity::PacketLevel;
    if (s == "ProcessTelemetry") return Granularity::ProcessTelemetry;
    if (s == "Mixed") return Granularity::Mixed;
    throw SchemaViolation("unknown feature granularity '" + std::string(s) + "'");
}

const DatasetProfile* KnowledgeBase::find(std::string_view name) const
{
    for (const auto& p : profiles) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

const std::vector<std::string>& recommended_attack_classes()
{
    static const std::vector<std::string> classes{
        "brute-force",  "DoS/DDoS",      "botnet", "web", "infiltration", "cyber-physical", "protocol-manipulation",
        "lateral-movement", "multi-stage",
    };
    return classes;
}

std::vector<std::string> validate_profile(const DatasetProfile& profile)
{
    std::vector<std::string> findings;
    if (profile.name.empty()) {
        findings.push_back("name is empty");
    }
    if (profile.scenario_count < 0) {
        findings.push_back(fmt::format("{}: scenario_count {} is negative", profile.name, profile.scenario_count));
    }
    if (profile.year < 1990 || profile.year > 2100) {
        findings.push_back(fmt::format("{}: year {} is outside 1990..2100", profile.name, profile.year));
    }
    if (profile.domain == Domain::EnterpriseIT && !profile.industrial_protocols.empty()) {
        findings.push_back(profile.name + ": EnterpriseIT dataset lists industrial protocols");
    }
    if (profile.domain == Domain::IndustrialOT && profile.industrial_protocols.empty()) {
        findings.push_back(profile.name + ": IndustrialOT dataset lists no industrial protocol");
    }
    for (const auto& tag : profile.attack_classes) {
        if (tag.empty()) {
            findings.push_back(profile.name + ": empty attack class tag");
        }
    }
    return findings;
}

DatasetProfile profile_from_json(const json& j)
{
    if (!j.is_object()) {
        throw SchemaViolation("profile must be a JSON object");
    }
    DatasetProfile p;
    p.name = required<std::string>(j, "name", "profile");
    const std::string who = "profile '" + p.name + "'";
    p.year = required<int>(j, "year", who);
    p.domain = domain_from_string(required<std::string>(j, "domain", who));
    p.industrial_protocols = required<std::vector<std::string>>(j, "industrial_protocols", who);
    p.enterprise_protocols = required<std::vector<std::string>>(j, "enterprise_protocols", who);
    p.attack_classes = required<std::vector<std::string>>(j, "attack_classes", who);
    p.scenario_count = required<long long>(j, "scenario_count", who);
    p.feature_granularity = granularity_from_string(required<std::string>(j, "feature_granularity", who));
    p.limitations = required<std::vector<std::string>>(j, "limitations", who);
    for (const auto& [key, value] : j.items()) {
        if (!schema_fields().count(key)) {
            p.annotations[key] = value;
        }
    }
    if (auto findings = validate_profile(p); !findings.empty()) {
        throw SchemaViolation(findings.front());
    }
    return p;
}

KnowledgeBase kb_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("profiles") || !j.at("profiles").is_array()) {
        throw SchemaViolation("knowledge base must be an object with a \"profiles\" array");
    }
    KnowledgeBase kb;
    kb.schema_version = j.value("schema_version", "1");
    std::set<std::string> names;
    for (const auto& pj : j.at("profiles")) {
        DatasetProfile p = profile_from_json(pj);
        if (!names.insert(p.name).second) {
            throw DuplicateName("dataset '" + p.name + "' appears more than once");
        }
        kb.profiles.push_back(std::move(p));
    }
    return kb;
}

KnowledgeBase load_profiles(const std::filesystem::path& path)
{
    return kb_from_json(read_json_file(path));
}

json to_json(const DatasetProfile& p)
{
    json j = p.annotations.is_object() ? p.annotations : json::object();
    j["name"] = p.name;
    j["year"] = p.year;
    j["domain"] = std::string(to_string(p.domain));
    j["industrial_protocols"] = p.industrial_protocols;
    j["enterprise_protocols"] = p.enterprise_protocols;
    j["attack_classes"] = p.attack_classes;
    j["scenario_count"] = p.scenario_count;
    j["feature_granularity"] = std::string(to_string(p.feature_granularity));
    j["limitations"] = p.limitations;
    return j;
}

json to_json(const KnowledgeBase& kb)
{
    json profiles = json::array();
    for (const auto& p : kb.profiles) {
        profiles.push_back(to_json(p));
    }
    return json{{"schema_version", kb.schema_version}, {"profiles", profiles}};
}

std::string profile_hash(const DatasetProfile& p)
{
    return sha256_hex(to_json(p).dump());
}

}  // namespace auditor::kb
