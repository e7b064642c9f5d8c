#include <doctest.h>

#include <algorithm>
#include <random>

#include "auditor/errors.hpp"
#include "auditor/json_io.hpp"
#include "auditor/stix.hpp"
#include "auditor/threat_model.hpp"
#include "support.hpp"

using namespace auditor;
using namespace auditor::threat;
using stix::Matrix;
using testing::attack_pattern;
using testing::bundle;
using testing::entity;
using testing::uses;

namespace {

stix::StixObjectGraph fixture_graph()
{
    const json g = entity("intrusion-set", "G0034");
    const json lonely = entity("intrusion-set", "G0001");
    const json s1 = entity("malware", "S0604");
    const json s2 = entity("malware", "S0603");
    const json c = entity("campaign", "C0025");
    const json t1570 = attack_pattern("T1570", "Lateral Tool Transfer");
    const json t0805 = attack_pattern("T0805", "Block Serial COM");
    const json smb = attack_pattern("T1021.002", "SMB/Windows Admin Shares");
    const json t0855 = attack_pattern("T0855", "Unauthorized Command Message");
    const json t0804 = attack_pattern("T0804", "Program PLC");
    return stix::parse_bundle(bundle({g, lonely, s1, s2, c, t1570, t0805, smb, t0855, t0804, uses(g, t1570),
                                      uses(g, t0805), uses(s1, smb), uses(s2, smb), uses(c, t0855), uses(c, t0804),
                                      uses(c, smb)}),
                              Matrix::Enterprise);
}

}  // namespace

TEST_CASE("extract: direct uses edges only")
{
    const auto g = fixture_graph();
    CHECK(extract_entity_techniques(g, "G0034") == std::set<std::string>{"T0805", "T1570"});
    CHECK(extract_entity_techniques(g, "G0001").empty());
    CHECK_THROWS_AS(extract_entity_techniques(g, "G9999"), UnknownEntity);
}

TEST_CASE("occurrence counts distinct entities")
{
    const auto g = fixture_graph();
    const auto two = build_occurrence_map(g, EntitySelection({"S0604", "S0603"}));
    CHECK(two.size() == 1);
    CHECK(two.occurrence_count("T1021.002") == 2);

    const auto one = build_occurrence_map(g, EntitySelection({"C0025"}));
    CHECK(one.size() == 3);
    for (const auto& [id, who] : one.users) CHECK(who.size() == 1);
    CHECK(one.occurrence_count("T9999") == 0);
}

TEST_CASE("strict and lenient handling of unknown entities")
{
    const auto g = fixture_graph();
    const EntitySelection sel({"G0034", "G9999"});
    CHECK_THROWS_AS(build_occurrence_map(g, sel, true), UnknownEntity);
    const auto m = build_occurrence_map(g, sel, false);
    CHECK(m.size() == 2);
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].find("G9999") != std::string::npos);
}

TEST_CASE("selection validation")
{
    CHECK_THROWS_AS(EntitySelection({"G0034", "G0034"}), SchemaViolation);
    CHECK_THROWS_AS(EntitySelection({"T1570"}), SchemaViolation);
    CHECK_THROWS_AS(EntitySelection::from_json(json{{"ids", 1}}), SchemaViolation);
    CHECK(EntitySelection::from_json(json::array({"S0603", "C0028"})).size() == 2);
}

TEST_CASE("default selection ships the fifteen energy-sector entities")
{
    const auto sel = default_energy_selection();
    CHECK(sel.size() == 15);
    const std::vector<std::string> expected{"S0603", "S0604", "S1009", "S0266", "S0372", "S0368", "S0366", "C0028",
                                            "C0025", "C0034", "G0034", "G0032", "G0074", "G0049", "G0088"};
    CHECK(sel.ids() == expected);
    const auto shipped = EntitySelection::from_json(read_json_file(testing::data_file("entities_energy.json")));
    CHECK(shipped.ids() == expected);
}

TEST_CASE("properties: bounded, monotone, order-independent")
{
    const auto g = fixture_graph();
    std::vector<std::string> all{"G0034", "G0001", "S0604", "S0603", "C0025"};
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::shuffle(all.begin(), all.end(), rng);
        const std::size_t cut = rng() % (all.size() + 1);
        const std::vector<std::string> a(all.begin(), all.begin() + static_cast<long>(cut));
        const auto ma = build_occurrence_map(g, EntitySelection(a));
        const auto mall = build_occurrence_map(g, EntitySelection(all));
        for (const auto& [id, who] : ma.users) {
            CHECK(who.size() <= a.size());
            CHECK(who.size() >= 1);
            CHECK(mall.occurrence_count(id) >= who.size());
            for (const auto& e : who) CHECK(std::find(a.begin(), a.end(), e) != a.end());
        }
        auto reversed = all;
        std::reverse(reversed.begin(), reversed.end());
        CHECK(build_occurrence_map(g, EntitySelection(reversed)) == mall);
    }
}

TEST_CASE("occurrence map JSON round-trip")
{
    const auto m = build_occurrence_map(fixture_graph(), EntitySelection({"G0034", "C0025", "S0604"}));
    CHECK(OccurrenceMap::from_json(json::parse(m.to_json().dump())) == m);
}
