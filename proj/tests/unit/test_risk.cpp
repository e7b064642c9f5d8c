#include <doctest.h>

#include <cmath>
#include <random>

#include "auditor/errors.hpp"
#include "auditor/risk.hpp"
#include "auditor/threat_model.hpp"

using namespace auditor;
using namespace auditor::risk;

namespace {

threat::OccurrenceMap counts(const std::map<std::string, int>& c)
{
    threat::OccurrenceMap m;
    for (const auto& [id, n] : c) {
        for (int i = 0; i < n; ++i) m.users[id].insert("S" + std::to_string(1000 + i));
    }
    return m;
}

}  // namespace

TEST_CASE("frequency score")
{
    CHECK(frequency_score(0) == 0.0);
    CHECK(frequency_score(1) == 1.0);
    CHECK(frequency_score(3) == 2.0);
    CHECK(frequency_score(31) == 5.0);
    CHECK(std::abs(frequency_score(2) - std::log2(3.0)) < 1e-12);
}

TEST_CASE("frequency score strictly increasing")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t a = rng() % 100000;
        const std::uint64_t b = a + 1 + rng() % 1000;
        CHECK(frequency_score(a) < frequency_score(b));
    }
}

TEST_CASE("weighted risk under the default combiner")
{
    CHECK(weighted_risk(10.0, 5.0) == doctest::Approx(10.0).epsilon(1e-12));
    for (double b : {1.0, 2.5, 7.0, 10.0}) CHECK(weighted_risk(b, 0.0) == doctest::Approx(0.5 * b));
    CHECK(weighted_risk(4.0, 2.0, "additive") == 6.0);
    CHECK_THROWS_AS(weighted_risk(4.0, 2.0, "cubic"), UnknownCombiner);
}

TEST_CASE("weighted risk strictly increasing in both arguments")
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> base(1.0, 9.5);
    std::uniform_real_distribution<double> freq(0.0, 5.0);
    std::uniform_real_distribution<double> step(0.01, 0.5);
    for (const auto& c : combiner_names()) {
        for (int i = 0; i < 500; ++i) {
            const double b = base(rng);
            const double f = freq(rng);
            CHECK(weighted_risk(b + step(rng), f, c) > weighted_risk(b, f, c));
            CHECK(weighted_risk(b, f + step(rng), c) > weighted_risk(b, f, c));
            CHECK(weighted_risk(b, f, c) > 0.0);
        }
    }
}

TEST_CASE("ranking")
{
    SUBCASE("tie broken by attack id")
    {
        const auto r = rank_techniques(counts({{"T1570", 1}, {"T0805", 1}}), BaseRiskTable{});
        REQUIRE(r.size() == 2);
        CHECK(r[0].attack_id == "T0805");
        CHECK(r[1].attack_id == "T1570");
    }
    SUBCASE("single technique")
    {
        CHECK(rank_techniques(counts({{"T0804", 2}}), BaseRiskTable{}).size() == 1);
    }
    SUBCASE("counts 7, 3, 1 with uniform base 5")
    {
        const auto r = rank_techniques(counts({{"T0001", 1}, {"T0002", 7}, {"T0003", 3}}), BaseRiskTable{5.0});
        REQUIRE(r.size() == 3);
        CHECK(r[0].attack_id == "T0002");
        CHECK(r[0].frequency_score == 3.0);
        CHECK(r[1].frequency_score == 2.0);
        CHECK(r[2].frequency_score == 1.0);
        // 5 * (0.5 + 0.1 * f)
        CHECK(r[0].weighted_risk == doctest::Approx(4.0));
        CHECK(r[1].weighted_risk == doctest::Approx(3.5));
        CHECK(r[2].weighted_risk == doctest::Approx(3.0));
        CHECK(r[0].combiner == "multiplicative");
    }
}

TEST_CASE("ranking is a permutation and invariant to base scaling")
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, int> c;
        std::map<std::string, double> base;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            const std::string id = "T" + std::to_string(1000 + static_cast<int>(rng() % 60));
            c[id] = 1 + static_cast<int>(rng() % 6);
            base[id] = 1.0 + static_cast<double>(rng() % 40) / 10.0;
        }
        const auto r1 = rank_techniques(counts(c), BaseRiskTable{5.0, base});
        std::map<std::string, double> scaled;
        for (const auto& [id, b] : base) scaled[id] = b * 2.0;
        const auto r2 = rank_techniques(counts(c), BaseRiskTable{5.0, scaled});
        REQUIRE(r1.size() == c.size());
        for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].attack_id == r2[i].attack_id);
        for (std::size_t i = 1; i < r1.size(); ++i) CHECK(r1[i - 1].weighted_risk >= r1[i].weighted_risk);
    }
}

TEST_CASE("base risk table")
{
    const auto t = BaseRiskTable::from_json(json{{"T1021.002", 8.5}, {"_default", 4.0}});
    CHECK(t.lookup("T1021.002") == 8.5);
    CHECK(t.lookup("T0001") == 4.0);
    CHECK(BaseRiskTable::from_json(t.to_json()).values() == t.values());
    CHECK_THROWS_AS(BaseRiskTable::from_json(json{{"T0001", 11.0}}), SchemaViolation);
    CHECK_THROWS_AS(BaseRiskTable::from_json(json{{"_default", 0.5}}), SchemaViolation);
    CHECK_THROWS_AS(BaseRiskTable::from_json(json{{"G0034", 5.0}}), SchemaViolation);
    CHECK(BaseRiskTable{}.default_value() == 5.0);
}

TEST_CASE("risk profile JSON round-trip")
{
    const auto r = rank_techniques(counts({{"T0804", 3}}), BaseRiskTable{7.25});
    CHECK(risk_profile_from_json(json::parse(to_json(r[0]).dump())) == r[0]);
}
