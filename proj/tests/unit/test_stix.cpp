#include <doctest.h>

#include "auditor/errors.hpp"
#include "auditor/json_io.hpp"
#include "auditor/stix.hpp"
#include "support.hpp"

using namespace auditor;
using namespace auditor::stix;
using testing::attack_pattern;
using testing::bundle;
using testing::entity;
using testing::uses;

TEST_CASE("tiny enterprise fixture: revoked pattern dropped, edges kept")
{
    const auto g = parse_bundle(read_text_file(testing::fixture("stix/enterprise_tiny.json")), Matrix::Enterprise);
    CHECK(g.techniques.size() == 2);
    CHECK(g.entities.size() == 1);
    CHECK(g.uses_edges.size() == 2);
    CHECK(g.techniques.count("T1570") == 1);
    CHECK(g.techniques.count("T1021.002") == 1);
    CHECK(g.techniques.count("T1999") == 0);
    CHECK(g.techniques.at("T1021.002").is_subtechnique);
    CHECK(g.techniques.at("T1570").tactics == std::vector<std::string>{"lateral-movement"});
    REQUIRE(g.bundles.size() == 1);
    CHECK(g.bundles[0].attack_spec_version == "15.1");
    CHECK(g.bundles[0].modified == "2024-04-23T00:00:00.000Z");
    for (const auto& [src, dst] : g.uses_edges) {
        CHECK(g.objects.count(src) == 1);
        CHECK(g.objects.count(dst) == 1);
    }
}

TEST_CASE("empty bundle")
{
    const auto g = parse_bundle(R"({"objects": []})", Matrix::Enterprise);
    CHECK(g.techniques.empty());
    CHECK(g.entities.empty());
    CHECK(g.uses_edges.empty());
}

TEST_CASE("ICS technique id keyed verbatim")
{
    const auto g = parse_bundle(bundle({attack_pattern("T0804", "Program PLC", {}, "mitre-ics-attack")}), Matrix::ICS);
    REQUIRE(g.techniques.count("T0804") == 1);
    CHECK(g.techniques.at("T0804").matrices == std::set<Matrix>{Matrix::ICS});
}

TEST_CASE("malformed bundles")
{
    CHECK_THROWS_AS(parse_bundle("not json", Matrix::Enterprise), MalformedBundle);
    CHECK_THROWS_AS(parse_bundle(R"({"type": "bundle"})", Matrix::Enterprise), MalformedBundle);
    CHECK_THROWS_AS(parse_bundle(R"({"objects": {}})", Matrix::Enterprise), MalformedBundle);
    CHECK_THROWS_AS(parse_bundle("[]", Matrix::Enterprise), MalformedBundle);
}

TEST_CASE("missing external id is a warning, not an error")
{
    json ap = attack_pattern("T1001", "Data Obfuscation");
    ap["external_references"] = json::array({{{"source_name", "capec"}, {"external_id", "CAPEC-1"}}});
    const auto g = parse_bundle(bundle({ap, attack_pattern("T1002", "Other")}), Matrix::Enterprise);
    CHECK(g.techniques.size() == 1);
    REQUIRE(g.warnings.size() == 1);
    CHECK(g.warnings[0].rfind("MissingExternalId", 0) == 0);
}

TEST_CASE("deprecated and irrelevant object types are excluded")
{
    json dep = attack_pattern("T1003", "Old");
    dep["x_mitre_deprecated"] = true;
    json mitigation{{"type", "course-of-action"}, {"id", "course-of-action--1"}, {"name", "m"}};
    const json g1 = entity("intrusion-set", "G0001");
    json rel = uses(g1, dep);
    const auto g = parse_bundle(bundle({dep, mitigation, g1, rel}), Matrix::Enterprise);
    CHECK(g.techniques.empty());
    CHECK(g.objects.count("course-of-action--1") == 0);
    CHECK(g.uses_edges.empty());  // its target was filtered
}

TEST_CASE("only uses relationships are retained")
{
    const json t = attack_pattern("T1005", "Data from Local System");
    const json s = entity("malware", "S0001");
    json rel = uses(s, t);
    rel["relationship_type"] = "mitigates";
    const auto g = parse_bundle(bundle({t, s, rel, uses(s, t)}), Matrix::Enterprise);
    CHECK(g.uses_edges.size() == 1);
}

TEST_CASE("entity kinds follow the id prefix")
{
    const auto g = parse_bundle(bundle({entity("intrusion-set", "G0034"), entity("malware", "S0603"),
                                        entity("tool", "S0002"), entity("campaign", "C0028"),
                                        entity("malware", "G0099")}),
                                Matrix::Enterprise);
    CHECK(g.entities.at("G0034").kind == EntityKind::Group);
    CHECK(g.entities.at("S0603").kind == EntityKind::Software);
    CHECK(g.entities.at("S0002").kind == EntityKind::Software);
    CHECK(g.entities.at("C0028").kind == EntityKind::Campaign);
    CHECK(g.entities.count("G0099") == 0);
    CHECK(entity_kind_for_id("X0001") == std::nullopt);
}

TEST_CASE("id patterns")
{
    CHECK(is_technique_id("T1021"));
    CHECK(is_technique_id("T1021.002"));
    CHECK_FALSE(is_technique_id("T1021.02"));
    CHECK_FALSE(is_technique_id("t1021"));
    CHECK(is_entity_id("G0034"));
    CHECK(is_entity_id("C0025"));
    CHECK_FALSE(is_entity_id("T0804"));
    CHECK_FALSE(is_entity_id("G34"));
}

TEST_CASE("merge: shared entity deduplicated")
{
    const auto e = parse_bundle(bundle({entity("intrusion-set", "G0034", "Sandworm Team")}), Matrix::Enterprise);
    const auto i = parse_bundle(bundle({entity("intrusion-set", "G0034", "Sandworm Team")}), Matrix::ICS);
    const auto m = merge_matrices(e, i);
    CHECK(m.entities.size() == 1);
    CHECK(m.entities.count("G0034") == 1);
}

TEST_CASE("merge: disjoint techniques")
{
    const auto e = parse_bundle(bundle({attack_pattern("T1570", "Lateral Tool Transfer")}), Matrix::Enterprise);
    const auto i = parse_bundle(bundle({attack_pattern("T0805", "Block Serial COM")}), Matrix::ICS);
    CHECK(merge_matrices(e, i).techniques.size() == 2);
}

TEST_CASE("merge: overlapping technique unions data sources and matrices")
{
    const auto e = parse_bundle(bundle({attack_pattern("T0866", "Exploitation of Remote Services", {"Network Traffic"})}),
                                Matrix::Enterprise);
    const auto i = parse_bundle(bundle({attack_pattern("T0866", "Exploitation of Remote Services", {"Process"})}),
                                Matrix::ICS);
    const auto m = merge_matrices(e, i);
    const auto& t = m.techniques.at("T0866");
    CHECK(t.data_sources == std::vector<std::string>{"Network Traffic", "Process"});
    CHECK(t.matrices == std::set<Matrix>{Matrix::Enterprise, Matrix::ICS});
    CHECK(m.warnings.empty());
}

TEST_CASE("merge: conflicting names keep the Enterprise name")
{
    const auto e = parse_bundle(bundle({attack_pattern("T0001", "Enterprise Name")}), Matrix::Enterprise);
    const auto i = parse_bundle(bundle({attack_pattern("T0001", "ICS Name")}), Matrix::ICS);
    const auto m = merge_matrices(e, i);
    CHECK(m.techniques.at("T0001").name == "Enterprise Name");
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].rfind("ConflictingNames", 0) == 0);
}

TEST_CASE("merge is idempotent and commutative up to names")
{
    const auto e = parse_bundle(read_text_file(testing::fixture("stix/enterprise_tiny.json")), Matrix::Enterprise);
    const auto i = parse_bundle(read_text_file(testing::fixture("stix/ics_tiny.json")), Matrix::ICS);
    const auto m = merge_matrices(e, i);
    CHECK(merge_matrices(m, i) == m);
    CHECK(merge_matrices(m, m) == m);

    const auto swapped = merge_matrices(i, e);
    CHECK(swapped.techniques == m.techniques);
    CHECK(swapped.entities == m.entities);
    std::set<std::string> merged_keys;
    std::set<std::string> swapped_keys;
    for (const auto& [k, v] : m.objects) merged_keys.insert(k);
    for (const auto& [k, v] : swapped.objects) swapped_keys.insert(k);
    CHECK(swapped_keys == merged_keys);

    // No technique key is duplicated: merged size equals the distinct id count.
    std::set<std::string> ids;
    for (const auto& [k, v] : e.techniques) ids.insert(k);
    for (const auto& [k, v] : i.techniques) ids.insert(k);
    CHECK(m.techniques.size() == ids.size());
    CHECK(m.entities.at("G0034").name == "Sandworm Team");
}

TEST_CASE("parse is deterministic and graphs round-trip through JSON")
{
    const std::string text = read_text_file(testing::fixture("stix/ics_tiny.json"));
    const auto a = parse_bundle(text, Matrix::ICS);
    const auto b = parse_bundle(text, Matrix::ICS);
    CHECK(a == b);
    CHECK(graph_from_json(to_json(a)) == a);
    CHECK(graph_from_json(json::parse(to_json(a).dump())) == a);
}
