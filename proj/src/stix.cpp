#include "auditor/stix.hpp"

#include "auditor/errors.hpp"

#include <algorithm>
#include <regex>

namespace auditor::stix {

namespace {

const std::regex& technique_pattern()
{
    static const std::regex re(R"(T\d{4}(\.\d{3})?)");
    return re;
}

const std::regex& entity_pattern()
{
    static const std::regex re(R"([GSC]\d{4})");
    return re;
}

bool flag_set(const json& obj, const char* key)
{
    auto it = obj.find(key);
    return it != obj.end() && it->is_boolean() && it->get<bool>();
}

std::string string_field(const json& obj, const char* key)
{
    auto it = obj.find(key);
    return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string{};
}

/// The ATT&CK external id from external_references, e.g. "T1021.002" or "G0034".
std::optional<std::string> attack_external_id(const json& obj)
{
    auto refs = obj.find("external_references");
    if (refs == obj.end() || !refs->is_array()) {
        return std::nullopt;
    }
    for (const auto& ref : *refs) {
        if (!ref.is_object()) {
            continue;
        }
        const std::string source = string_field(ref, "source_name");
        // Enterprise uses "mitre-attack"; older ICS releases used "mitre-ics-attack".
        if (source != "mitre-attack" && source != "mitre-ics-attack") {
            continue;
        }
        std::string id = string_field(ref, "external_id");
        if (!id.empty()) {
            return id;
        }
    }
    return std::nullopt;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::string> string_list(const json& obj, const char* key)
{
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it != obj.end() && it->is_array()) {
        for (const auto& v : *it) {
            if (v.is_string()) {
                out.push_back(v.get<std::string>());
            }
        }
    }
    return out;
}

std::vector<std::string> tactic_names(const json& obj)
{
    std::vector<std::string> out;
    auto it = obj.find("kill_chain_phases");
    if (it != obj.end() && it->is_array()) {
        for (const auto& phase : *it) {
            if (phase.is_object()) {
                std::string name = string_field(phase, "phase_name");
                if (!name.empty()) {
                    out.push_back(std::move(name));
                }
            }
        }
    }
    return sorted_unique(std::move(out));
}

std::optional<EntityKind> kind_for_type(std::string_view type)
{
    if (type == "intrusion-set") return EntityKind::Group;
    if (type == "malware" || type == "tool") return EntityKind::Software;
    if (type == "campaign") return EntityKind::Campaign;
    return std::nullopt;
}

bool retained_type(std::string_view type)
{
    return type == "attack-pattern" || type == "relationship" || kind_for_type(type).has_value();
}

template <typename T>
void append_unique(std::vector<T>& dst, const std::vector<T>& src)
{
    for (const auto& v : src) {
        if (std::find(dst.begin(), dst.end(), v) == dst.end()) {
            dst.push_back(v);
        }
    }
}

}  // namespace

std::string_view to_string(Matrix m)
{
    return m == Matrix::Enterprise ? "Enterprise" : "ICS";
}

Matrix matrix_from_string(std::string_view s)
{
    if (s == "Enterprise") return Matrix::Enterprise;
    if (s == "ICS") return Matrix::ICS;
    throw SchemaViolation("unknown matrix '" + std::string(s) + "'");
}

std::string_view to_string(EntityKind k)
{
    switch (k) {
        case EntityKind::Group: return "Group";
        case EntityKind::Software: return "Software";
        case EntityKind::Campaign: return "Campaign";
    }
    return "Group";
}

bool is_technique_id(std::string_view id)
{
    return std::regex_match(id.begin(), id.end(), technique_pattern());
}

bool is_entity_id(std::string_view id)
{
    return std::regex_match(id.begin(), id.end(), entity_pattern());
}

std::optional<EntityKind> entity_kind_for_id(std::string_view id)
{
    if (!is_entity_id(id)) {
        return std::nullopt;
    }
    switch (id.front()) {
        case 'G': return EntityKind::Group;
        case 'S': return EntityKind::Software;
        default: return EntityKind::Campaign;
    }
}

StixObjectGraph parse_bundle(std::string_view raw_json_text, Matrix matrix_tag)
{
    json doc;
    try {
        doc = json::parse(raw_json_text);
    } catch (const json::parse_error& e) {
        throw MalformedBundle(e.what());
    }
    if (!doc.is_object()) {
        throw MalformedBundle("top-level value is not an object");
    }
    auto objects_it = doc.find("objects");
    if (objects_it == doc.end() || !objects_it->is_array()) {
        throw MalformedBundle("missing \"objects\" array");
    }

    StixObjectGraph g;
    BundleInfo info;
    info.matrix = matrix_tag;
    info.bundle_id = string_field(doc, "id");
    info.object_count = objects_it->size();

    std::vector<const json*> relationships;

    for (const auto& obj : *objects_it) {
        if (!obj.is_object()) {
            continue;
        }
        const std::string type = string_field(obj, "type");
        const std::string modified = string_field(obj, "modified");
        if (modified > info.modified) {
            info.modified = modified;
        }
        if (type == "x-mitre-collection" || (type == "x-mitre-matrix" && info.attack_spec_version.empty())) {
            std::string v = string_field(obj, "x_mitre_version");
            if (!v.empty()) {
                info.attack_spec_version = std::move(v);
            }
        }
        if (!retained_type(type) || flag_set(obj, "revoked") || flag_set(obj, "x_mitre_deprecated")) {
            continue;
        }
        const std::string stix_id = string_field(obj, "id");
        if (stix_id.empty()) {
            g.warnings.push_back("object of type " + type + " without id skipped");
            continue;
        }
        g.objects.emplace(stix_id, obj);

        if (type == "relationship") {
            relationships.push_back(&obj);
            continue;
        }

        const auto ext_id = attack_external_id(obj);
        if (!ext_id) {
            g.warnings.push_back("MissingExternalId: " + type + " " + stix_id + " has no ATT&CK external id; skipped");
            continue;
        }

        if (type == "attack-pattern") {
            if (!is_technique_id(*ext_id)) {
                g.warnings.push_back("attack-pattern " + stix_id + " has malformed technique id '" + *ext_id + "'; skipped");
                continue;
            }
            if (g.techniques.count(*ext_id)) {
                g.warnings.push_back("duplicate technique " + *ext_id + " (" + stix_id + "); first occurrence kept");
                continue;
            }
            TechniqueRecord t;
            t.attack_id = *ext_id;
            t.name = string_field(obj, "name");
            t.matrices = {matrix_tag};
            t.data_sources = sorted_unique(string_list(obj, "x_mitre_data_sources"));
            t.is_subtechnique = flag_set(obj, "x_mitre_is_subtechnique") || ext_id->find('.') != std::string::npos;
            t.description = string_field(obj, "description");
            t.tactics = tactic_names(obj);
            g.techniques.emplace(t.attack_id, std::move(t));
            g.attack_id_by_stix.emplace(stix_id, *ext_id);
        } else {
            const EntityKind kind = *kind_for_type(type);
            if (entity_kind_for_id(*ext_id) != kind) {
                g.warnings.push_back(type + " " + stix_id + " has id '" + *ext_id + "' inconsistent with its kind; skipped");
                continue;
            }
            if (g.entities.count(*ext_id)) {
                g.warnings.push_back("duplicate entity " + *ext_id + " (" + stix_id + "); first occurrence kept");
                continue;
            }
            g.entities.emplace(*ext_id, ThreatEntity{*ext_id, kind, string_field(obj, "name")});
            g.attack_id_by_stix.emplace(stix_id, *ext_id);
        }
    }

    for (const json* rel : relationships) {
        if (string_field(*rel, "relationship_type") != "uses") {
            continue;
        }
        UsesEdge edge{string_field(*rel, "source_ref"), string_field(*rel, "target_ref")};
        if (!g.objects.count(edge.first) || !g.objects.count(edge.second)) {
            continue;
        }
        if (std::find(g.uses_edges.begin(), g.uses_edges.end(), edge) == g.uses_edges.end()) {
            g.uses_edges.push_back(std::move(edge));
        }
    }

    g.bundles.push_back(std::move(info));
    return g;
}

StixObjectGraph merge_matrices(const StixObjectGraph& enterprise, const StixObjectGraph& ics)
{
    StixObjectGraph out = enterprise;

    for (const auto& [id, obj] : ics.objects) {
        out.objects.emplace(id, obj);
    }
    for (const auto& [stix_id, attack_id] : ics.attack_id_by_stix) {
        out.attack_id_by_stix.emplace(stix_id, attack_id);
    }

    for (const auto& [id, tech] : ics.techniques) {
        auto [it, inserted] = out.techniques.emplace(id, tech);
        if (inserted) {
            continue;
        }
        TechniqueRecord& merged = it->second;
        if (merged.name != tech.name) {
            out.warnings.push_back("ConflictingNames: technique " + id + " is '" + merged.name + "' vs '" + tech.name +
                                   "'; keeping '" + merged.name + "'");
        }
        merged.matrices.insert(tech.matrices.begin(), tech.matrices.end());
        std::vector<std::string> ds = merged.data_sources;
        ds.insert(ds.end(), tech.data_sources.begin(), tech.data_sources.end());
        merged.data_sources = sorted_unique(std::move(ds));
        std::vector<std::string> tactics = merged.tactics;
        tactics.insert(tactics.end(), tech.tactics.begin(), tech.tactics.end());
        merged.tactics = sorted_unique(std::move(tactics));
        merged.is_subtechnique = merged.is_subtechnique || tech.is_subtechnique;
        if (merged.description.empty()) {
            merged.description = tech.description;
        }
    }

    for (const auto& [id, entity] : ics.entities) {
        auto [it, inserted] = out.entities.emplace(id, entity);
        if (!inserted && it->second.name != entity.name) {
            out.warnings.push_back("ConflictingNames: entity " + id + " is '" + it->second.name + "' vs '" +
                                   entity.name + "'; keeping '" + it->second.name + "'");
        }
    }

    append_unique(out.uses_edges, ics.uses_edges);
    append_unique(out.bundles, ics.bundles);
    append_unique(out.warnings, ics.warnings);
    return out;
}

json to_json(const TechniqueRecord& t)
{
    json matrices = json::array();
    for (Matrix m : t.matrices) {
        matrices.push_back(std::string(to_string(m)));
    }
    return json{{"attack_id", t.attack_id},
                {"name", t.name},
                {"matrices", matrices},
                {"data_sources", t.data_sources},
                {"is_subtechnique", t.is_subtechnique},
                {"description", t.description},
                {"tactics", t.tactics}};
}

TechniqueRecord technique_from_json(const json& j)
{
    try {
        TechniqueRecord t;
        t.attack_id = j.at("attack_id").get<std::string>();
        if (!is_technique_id(t.attack_id)) {
            throw SchemaViolation("bad technique id '" + t.attack_id + "'");
        }
        t.name = j.value("name", "");
        for (const auto& m : j.at("matrices")) {
            t.matrices.insert(matrix_from_string(m.get<std::string>()));
        }
        if (t.matrices.empty()) {
            throw SchemaViolation("technique " + t.attack_id + " has no matrices");
        }
        t.data_sources = j.value("data_sources", std::vector<std::string>{});
        t.is_subtechnique = j.value("is_subtechnique", t.attack_id.find('.') != std::string::npos);
        t.description = j.value("description", "");
        t.tactics = j.value("tactics", std::vector<std::string>{});
        return t;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("technique record: ") + e.what());
    }
}

json to_json(const StixObjectGraph& g)
{
    json bundles = json::array();
    for (const auto& b : g.bundles) {
        bundles.push_back({{"matrix", std::string(to_string(b.matrix))},
                           {"bundle_id", b.bundle_id},
                           {"attack_spec_version", b.attack_spec_version},
                           {"modified", b.modified},
                           {"object_count", b.object_count}});
    }
    json techniques = json::array();
    for (const auto& [id, t] : g.techniques) {
        techniques.push_back(to_json(t));
    }
    json entities = json::array();
    for (const auto& [id, e] : g.entities) {
        entities.push_back({{"attack_id", e.attack_id}, {"kind", std::string(to_string(e.kind))}, {"name", e.name}});
    }
    json edges = json::array();
    for (const auto& [s, t] : g.uses_edges) {
        edges.push_back(json::array({s, t}));
    }
    return json{{"bundles", bundles},
                {"techniques", techniques},
                {"entities", entities},
                {"uses_edges", edges},
                {"stix_index", g.attack_id_by_stix},
                {"objects", g.objects},
                {"warnings", g.warnings}};
}

StixObjectGraph graph_from_json(const json& j)
{
    try {
        StixObjectGraph g;
        for (const auto& b : j.at("bundles")) {
            BundleInfo info;
            info.matrix = matrix_from_string(b.at("matrix").get<std::string>());
            info.bundle_id = b.value("bundle_id", "");
            info.attack_spec_version = b.value("attack_spec_version", "");
            info.modified = b.value("modified", "");
            info.object_count = b.value("object_count", std::size_t{0});
            g.bundles.push_back(std::move(info));
        }
        for (const auto& tj : j.at("techniques")) {
            TechniqueRecord t = technique_from_json(tj);
            const std::string id = t.attack_id;
            if (!g.techniques.emplace(id, std::move(t)).second) {
                throw SchemaViolation("duplicate technique " + id);
            }
        }
        for (const auto& ej : j.at("entities")) {
            ThreatEntity e;
            e.attack_id = ej.at("attack_id").get<std::string>();
            auto kind = entity_kind_for_id(e.attack_id);
            if (!kind) {
                throw SchemaViolation("bad entity id '" + e.attack_id + "'");
            }
            e.kind = *kind;
            e.name = ej.value("name", "");
            g.entities.emplace(e.attack_id, std::move(e));
        }
        for (const auto& ej : j.at("uses_edges")) {
            g.uses_edges.emplace_back(ej.at(0).get<std::string>(), ej.at(1).get<std::string>());
        }
        g.attack_id_by_stix = j.at("stix_index").get<std::map<std::string, std::string>>();
        if (auto it = j.find("objects"); it != j.end()) {
            g.objects = it->get<std::map<std::string, json>>();
        }
        g.warnings = j.value("warnings", std::vector<std::string>{});
        return g;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("graph file: ") + e.what());
    }
}

}  // namespace auditor::stix
