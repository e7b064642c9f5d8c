#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "auditor/json_io.hpp"

namespace auditor::stix {

enum class Matrix { Enterprise, ICS };

std::string_view to_string(Matrix m);
Matrix matrix_from_string(std::string_view s);

enum class EntityKind { Group, Software, Campaign };

std::string_view to_string(EntityKind k);

struct TechniqueRecord {
    std::string attack_id;
    std::string name;
    std::set<Matrix> matrices;
    std::vector<std::string> data_sources;
    bool is_subtechnique = false;
    std::string description;
    /// Kill-chain phase names ("lateral-movement", "impair-process-control", ...).
    std::vector<std::string> tactics;

    friend bool operator==(const TechniqueRecord&, const TechniqueRecord&) = default;
};

struct ThreatEntity {
    std::string attack_id;
    EntityKind kind = EntityKind::Group;
    std::string name;

    friend bool operator==(const ThreatEntity&, const ThreatEntity&) = default;
};

/// Version information of one ingested bundle, carried through to reports.
struct BundleInfo {
    Matrix matrix = Matrix::Enterprise;
    std::string bundle_id;
    std::string attack_spec_version;  ///< x_mitre_version of the matrix/collection object, if any
    std::string modified;             ///< newest `modified` timestamp found in the bundle
    std::size_t object_count = 0;

    friend bool operator==(const BundleInfo&, const BundleInfo&) = default;
};

using UsesEdge = std::pair<std::string, std::string>;  // (source STIX id, target STIX id)

struct StixObjectGraph {
    std::map<std::string, json> objects;  ///< STIX id -> raw object
    std::map<std::string, TechniqueRecord> techniques;
    std::map<std::string, ThreatEntity> entities;
    std::vector<UsesEdge> uses_edges;
    /// STIX id -> ATT&CK external id, for every retained technique and entity object.
    std::map<std::string, std::string> attack_id_by_stix;
    std::vector<BundleInfo> bundles;
    std::vector<std::string> warnings;

    friend bool operator==(const StixObjectGraph&, const StixObjectGraph&) = default;
};

bool is_technique_id(std::string_view id);
bool is_entity_id(std::string_view id);
/// Kind implied by the id prefix (G, S, C); nullopt for anything else.
std::optional<EntityKind> entity_kind_for_id(std::string_view id);

/// Parses one ATT&CK STIX 2.1 bundle. Revoked and deprecated objects are dropped,
/// objects without a mitre-attack external id are skipped with a warning.
/// Throws MalformedBundle when the text is not JSON or has no "objects" array.
StixObjectGraph parse_bundle(std::string_view raw_json_text, Matrix matrix_tag);

/// Unions two graphs. Techniques merge matrices and data sources; on a name
/// conflict the Enterprise-side name wins and a warning is recorded.
StixObjectGraph merge_matrices(const StixObjectGraph& enterprise, const StixObjectGraph& ics);

json to_json(const TechniqueRecord& t);
TechniqueRecord technique_from_json(const json& j);
json to_json(const StixObjectGraph& g);
StixObjectGraph graph_from_json(const json& j);

}  // namespace auditor::stix
