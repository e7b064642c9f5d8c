#include "auditor/threat_model.hpp"

#include "auditor/errors.hpp"

#include <algorithm>

namespace auditor::threat {

EntitySelection::EntitySelection(std::vector<std::string> ids) : ids_(std::move(ids))
{
    std::set<std::string> seen;
    for (const auto& id : ids_) {
        if (!stix::is_entity_id(id)) {
            throw SchemaViolation("entity selection: '" + id + "' is not a group/software/campaign id");
        }
        if (!seen.insert(id).second) {
            throw SchemaViolation("entity selection: duplicate id '" + id + "'");
        }
    }
}

EntitySelection EntitySelection::from_json(const json& j)
{
    if (!j.is_array()) {
        throw SchemaViolation("entity selection must be a JSON array of id strings");
    }
    std::vector<std::string> ids;
    for (const auto& v : j) {
        if (!v.is_string()) {
            throw SchemaViolation("entity selection must contain only strings");
        }
        ids.push_back(v.get<std::string>());
    }
    return EntitySelection(std::move(ids));
}

json EntitySelection::to_json() const
{
    return ids_;
}

EntitySelection default_energy_selection()
{
    return EntitySelection({
        // software
        "S0603", "S0604", "S1009", "S0266", "S0372", "S0368", "S0366",
        // campaigns: Ukraine electric power attacks 2015, 2016, 2022
        "C0028", "C0025", "C0034",
        // groups
        "G0034", "G0032", "G0074", "G0049", "G0088",
    });
}

std::size_t OccurrenceMap::occurrence_count(const std::string& attack_id) const
{
    auto it = users.find(attack_id);
    return it == users.end() ? 0 : it->second.size();
}

json OccurrenceMap::to_json() const
{
    json rows = json::array();
    for (const auto& [id, who] : users) {
        rows.push_back({{"attack_id", id}, {"occurrence_count", who.size()}, {"entities", who}});
    }
    return json{{"occurrences", rows}, {"warnings", warnings}};
}

OccurrenceMap OccurrenceMap::from_json(const json& j)
{
    try {
        OccurrenceMap m;
        for (const auto& row : j.at("occurrences")) {
            const std::string id = row.at("attack_id").get<std::string>();
            auto who = row.at("entities").get<std::set<std::string>>();
            if (who.empty()) {
                throw SchemaViolation("technique " + id + " has no using entity");
            }
            m.users.emplace(id, std::move(who));
        }
        m.warnings = j.value("warnings", std::vector<std::string>{});
        return m;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("occurrence map: ") + e.what());
    }
}

std::set<std::string> extract_entity_techniques(const stix::StixObjectGraph& graph, const std::string& entity_id)
{
    if (!graph.entities.count(entity_id)) {
        throw UnknownEntity(entity_id);
    }
    std::set<std::string> out;
    for (const auto& [source, target] : graph.uses_edges) {
        auto src = graph.attack_id_by_stix.find(source);
        if (src == graph.attack_id_by_stix.end() || src->second != entity_id) {
            continue;
        }
        auto dst = graph.attack_id_by_stix.find(target);
        if (dst != graph.attack_id_by_stix.end() && graph.techniques.count(dst->second)) {
            out.insert(dst->second);
        }
    }
    return out;
}

OccurrenceMap build_occurrence_map(const stix::StixObjectGraph& graph, const EntitySelection& selection, bool strict)
{
    OccurrenceMap map;
    for (const auto& entity_id : selection.ids()) {
        if (!graph.entities.count(entity_id)) {
            if (strict) {
                throw UnknownEntity(entity_id);
            }
            map.warnings.push_back("UnknownEntity: " + entity_id + " not present in graph; skipped");
            continue;
        }
        for (const auto& technique : extract_entity_techniques(graph, entity_id)) {
            map.users[technique].insert(entity_id);
        }
    }
    return map;
}

}  // namespace auditor::threat
