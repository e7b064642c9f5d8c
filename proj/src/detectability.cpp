#include "auditor/detectability.hpp"

#include "auditor/errors.hpp"

#include <algorithm>
#include <cctype>

namespace auditor::detect {

namespace {

std::string lowered(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool any_match(const std::vector<std::string>& haystacks, const std::vector<std::string>& needles)
{
    for (const auto& h : haystacks) {
        for (const auto& n : needles) {
            if (h.find(n) != std::string::npos) {
                return true;
            }
        }
    }
    return false;
}

std::vector<std::string> normalise(const std::vector<std::string>& v, bool case_sensitive)
{
    if (case_sensitive) {
        return v;
    }
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& s : v) {
        out.push_back(lowered(s));
    }
    return out;
}

}  // namespace

std::string_view to_string(DetectabilityClass c)
{
    switch (c) {
        case DetectabilityClass::Network: return "Network";
        case DetectabilityClass::HostPhysical: return "HostPhysical";
        case DetectabilityClass::Partial: return "Partial";
        case DetectabilityClass::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

DetectabilityClass class_from_string(std::string_view s)
{
    if (s == "Network") return DetectabilityClass::Network;
    if (s == "HostPhysical") return DetectabilityClass::HostPhysical;
    if (s == "Partial") return DetectabilityClass::Partial;
    if (s == "Unclassified") return DetectabilityClass::Unclassified;
    throw SchemaViolation("unknown detectability class '" + std::string(s) + "'");
}

KeywordConfig KeywordConfig::defaults()
{
    return KeywordConfig{
        {"Network", "Packet", "Protocol", "ICS Network", "Network Traffic"},
        {"Process", "File", "Registry", "Memory", "Sensor", "Kernel", "Application Log"},
        false,
    };
}

KeywordConfig KeywordConfig::from_json(const json& j)
{
    KeywordConfig cfg = defaults();
    try {
        if (j.contains("network_keywords")) cfg.network_keywords = j.at("network_keywords").get<std::vector<std::string>>();
        if (j.contains("host_keywords")) cfg.host_keywords = j.at("host_keywords").get<std::vector<std::string>>();
        if (j.contains("case_sensitive")) cfg.case_sensitive = j.at("case_sensitive").get<bool>();
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("keyword config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json KeywordConfig::to_json() const
{
    return json{{"network_keywords", network_keywords},
                {"host_keywords", host_keywords},
                {"case_sensitive", case_sensitive}};
}

void KeywordConfig::validate() const
{
    if (network_keywords.empty() || host_keywords.empty()) {
        throw SchemaViolation("keyword config: both keyword lists must be non-empty");
    }
    const auto net = normalise(network_keywords, case_sensitive);
    const auto host = normalise(host_keywords, case_sensitive);
    for (const auto& k : net) {
        if (k.empty()) {
            throw SchemaViolation("keyword config: empty keyword");
        }
        if (std::find(host.begin(), host.end(), k) != host.end()) {
            throw SchemaViolation("keyword config: '" + k + "' appears in both lists");
        }
    }
    if (std::find(host.begin(), host.end(), std::string{}) != host.end()) {
        throw SchemaViolation("keyword config: empty keyword");
    }
}

DetectabilityClass classify_technique(const stix::TechniqueRecord& record, const KeywordConfig& config)
{
    if (record.data_sources.empty()) {
        return DetectabilityClass::Unclassified;
    }
    const auto sources = normalise(record.data_sources, config.case_sensitive);
    const bool network = any_match(sources, normalise(config.network_keywords, config.case_sensitive));
    const bool host = any_match(sources, normalise(config.host_keywords, config.case_sensitive));
    if (network && host) return DetectabilityClass::Partial;
    if (network) return DetectabilityClass::Network;
    if (host) return DetectabilityClass::HostPhysical;
    return DetectabilityClass::Unclassified;
}

FilterResult filter_network_detectable(const std::vector<stix::TechniqueRecord>& records, const KeywordConfig& config,
                                       bool include_partial)
{
    FilterResult r;
    r.summary.include_partial = include_partial;
    r.summary.total = records.size();
    for (auto c : {DetectabilityClass::Network, DetectabilityClass::HostPhysical, DetectabilityClass::Partial,
                   DetectabilityClass::Unclassified}) {
        r.summary.counts[c] = 0;
    }
    for (const auto& rec : records) {
        const auto c = classify_technique(rec, config);
        ++r.summary.counts[c];
        r.classes[rec.attack_id] = c;
        if (c == DetectabilityClass::Network || (include_partial && c == DetectabilityClass::Partial)) {
            r.kept.push_back(rec);
        }
    }
    r.summary.kept = r.kept.size();
    return r;
}

json to_json(const FilterResult& r)
{
    json counts = json::object();
    for (const auto& [c, n] : r.summary.counts) {
        counts[std::string(to_string(c))] = n;
    }
    json classes = json::object();
    for (const auto& [id, c] : r.classes) {
        classes[id] = std::string(to_string(c));
    }
    json kept = json::array();
    for (const auto& t : r.kept) {
        json tj = stix::to_json(t);
        tj["detectability"] = std::string(to_string(r.classes.at(t.attack_id)));
        kept.push_back(std::move(tj));
    }
    return json{{"summary",
                 {{"total", r.summary.total},
                  {"kept", r.summary.kept},
                  {"include_partial", r.summary.include_partial},
                  {"counts", counts}}},
                {"classes", classes},
                {"techniques", kept}};
}

std::vector<stix::TechniqueRecord> techniques_from_json(const json& j)
{
    const json* list = &j;
    if (j.is_object()) {
        if (!j.contains("techniques")) {
            throw SchemaViolation("technique file has no \"techniques\" array");
        }
        list = &j.at("techniques");
    }
    if (!list->is_array()) {
        throw SchemaViolation("technique list must be an array");
    }
    std::vector<stix::TechniqueRecord> out;
    for (const auto& t : *list) {
        out.push_back(stix::technique_from_json(t));
    }
    return out;
}

}  // namespace auditor::detect
