#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "auditor/stix.hpp"

namespace auditor::threat {

/// Ordered, duplicate-free list of ATT&CK group/software/campaign ids.
class EntitySelection {
public:
    EntitySelection() = default;
    /// Throws SchemaViolation on a malformed or duplicate id.
    explicit EntitySelection(std::vector<std::string> ids);

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }

    static EntitySelection from_json(const json& j);
    json to_json() const;

private:
    std::vector<std::string> ids_;
};

/// The 15 energy-sector software, campaign and group ids analysed by default.
EntitySelection default_energy_selection();

/// technique attack_id -> distinct selected entities using it.
struct OccurrenceMap {
    std::map<std::string, std::set<std::string>> users;
    std::vector<std::string> warnings;

    std::size_t occurrence_count(const std::string& attack_id) const;
    std::size_t size() const noexcept { return users.size(); }

    json to_json() const;
    static OccurrenceMap from_json(const json& j);

    friend bool operator==(const OccurrenceMap& a, const OccurrenceMap& b) { return a.users == b.users; }
};

/// Techniques one "uses" hop away from the entity. Throws UnknownEntity.
std::set<std::string> extract_entity_techniques(const stix::StixObjectGraph& graph, const std::string& entity_id);

/// Only direct entity -> technique edges are counted; campaign attribution is not followed.
/// With strict=false unknown ids are skipped and noted in `warnings`.
OccurrenceMap build_occurrence_map(const stix::StixObjectGraph& graph, const EntitySelection& selection,
                                   bool strict = true);

}  // namespace auditor::threat
