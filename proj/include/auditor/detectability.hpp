#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "auditor/stix.hpp"

namespace auditor::detect {

enum class DetectabilityClass { Network, HostPhysical, Partial, Unclassified };

std::string_view to_string(DetectabilityClass c);
DetectabilityClass class_from_string(std::string_view s);

struct KeywordConfig {
    std::vector<std::string> network_keywords;
    std::vector<std::string> host_keywords;
    bool case_sensitive = false;

    /// Network: Network, Packet, Protocol, ICS Network, Network Traffic.
    /// Host/physical: Process, File, Registry, Memory, Sensor, Kernel, Application Log.
    static KeywordConfig defaults();
    /// Partial documents override individual fields of the defaults.
    static KeywordConfig from_json(const json& j);
    json to_json() const;

    /// Throws SchemaViolation when a list is empty or a keyword is in both lists.
    void validate() const;
};

/// Substring match of every data source against both keyword lists.
DetectabilityClass classify_technique(const stix::TechniqueRecord& record, const KeywordConfig& config);

struct FilterSummary {
    std::map<DetectabilityClass, std::size_t> counts;
    std::size_t total = 0;
    std::size_t kept = 0;
    bool include_partial = true;
};

struct FilterResult {
    std::vector<stix::TechniqueRecord> kept;
    std::map<std::string, DetectabilityClass> classes;  ///< every input technique
    FilterSummary summary;
};

/// Keeps Network (and Partial when include_partial) records, in input order.
FilterResult filter_network_detectable(const std::vector<stix::TechniqueRecord>& records, const KeywordConfig& config,
                                       bool include_partial = true);

json to_json(const FilterResult& r);
/// Reads back the kept technique list of a persisted filter result.
std::vector<stix::TechniqueRecord> techniques_from_json(const json& j);

}  // namespace auditor::detect
