#include <doctest.h>

#include <fmt/format.h>

#include <regex>
#include <sstream>

#include "auditor/gap_analysis.hpp"
#include "auditor/json_io.hpp"
#include "auditor/report.hpp"
#include "support.hpp"

using namespace auditor;
using coverage::Label;

namespace {

gaps::CoverageMatrix fixture_matrix()
{
    return gaps::CoverageMatrix::from_json(read_json_file(testing::fixture("stats_10x3.json")).at("matrix"));
}

std::vector<std::vector<coverage::AssessmentRecord>> two_assessors(const gaps::CoverageMatrix& m)
{
    std::vector<std::vector<coverage::AssessmentRecord>> sets(2);
    for (std::size_t t = 0; t < m.techniques().size(); ++t) {
        for (std::size_t d = 0; d < m.datasets().size(); ++d) {
            coverage::AssessmentRecord r;
            r.attack_id = m.techniques()[t];
            r.dataset_name = m.datasets()[d];
            r.assessor_id = "first";
            r.label = m.cell(t, d);
            sets[0].push_back(r);
            r.assessor_id = "second";
            r.label = (t % 2) ? m.cell(t, d) : Label::No;
            sets[1].push_back(r);
        }
    }
    return sets;
}

std::vector<risk::RiskProfile> risks(const gaps::CoverageMatrix& m)
{
    std::vector<risk::RiskProfile> out;
    for (std::size_t t = 0; t < m.techniques().size(); ++t) {
        risk::RiskProfile p;
        p.attack_id = m.techniques()[t];
        p.weighted_risk = 2.0 + static_cast<double>(t % 4);
        out.push_back(p);
    }
    return out;
}

std::size_t count_lines(const std::string& s)
{
    std::size_t n = 0;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("analytics content")
{
    const auto m = fixture_matrix();
    const auto a = report::compute_analytics(m, two_assessors(m), risks(m), Label::Partial);
    CHECK(a.technique_count == 10);
    REQUIRE(a.stats.size() == 3);
    REQUIRE(a.best_by_size.size() == 3);
    CHECK(a.pair_ranking.size() == 3);
    REQUIRE(a.agreement.has_value());
    CHECK(a.agreement->assessor_a == "first");
    CHECK(a.risk_coverage.size() == 10);
    CHECK(a.risk_coverage_correlation.has_value());
    CHECK(a.dataset_overlap.size() == 3);
}

TEST_CASE("analytics JSON round-trip")
{
    const auto m = fixture_matrix();
    const auto a = report::compute_analytics(m, two_assessors(m), risks(m), Label::Partial);
    CHECK(report::analytics_from_json(json::parse(dump_canonical(report::to_json(a)))) == a);

    const auto single = report::compute_analytics(m, {two_assessors(m)[0]}, {}, Label::Full);
    CHECK_FALSE(single.agreement.has_value());
    CHECK(report::analytics_from_json(json::parse(report::to_json(single).dump())) == single);
}

TEST_CASE("CSV shapes")
{
    const auto m = fixture_matrix();
    const auto a = report::compute_analytics(m, two_assessors(m), {}, Label::Partial);
    const auto csv = report::coverage_matrix_csv(m);
    CHECK(count_lines(csv) == m.techniques().size() + 1);
    CHECK(csv.rfind("attack_id,A,B,C\n", 0) == 0);
    CHECK(csv.find("\nT0001,Full,No,Partial\n") != std::string::npos);
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == 3);

    const auto ag = report::agreement_csv(m, a);
    CHECK(count_lines(ag) == 4);
}

TEST_CASE("Markdown means match JSON to three decimals")
{
    const auto m = fixture_matrix();
    const auto a = report::compute_analytics(m, two_assessors(m), risks(m), Label::Partial);
    const json meta{{"config_hash", "abc"}, {"assessors", {"first", "second"}}};
    const auto md = report::markdown(a, meta);
    for (const auto& s : a.stats) {
        const std::regex row("\\| " + s.dataset + " \\| ([0-9.]+) \\|");
        std::smatch hit;
        REQUIRE(std::regex_search(md, hit, row));
        CHECK(hit[1].str() == fmt::format("{:.3f}", s.mean_score));
    }
    CHECK(md.find("abc") != std::string::npos);
    CHECK(md.find("second") != std::string::npos);
}

TEST_CASE("emit writes every artifact")
{
    testing::TempDir dir;
    const auto m = fixture_matrix();
    const auto a = report::compute_analytics(m, two_assessors(m), risks(m), Label::Partial);
    const auto written = report::emit_report(dir.path(), m, a, json{{"config_hash", "abc"}});
    for (const char* f : {"report.json", "coverage_matrix.csv", "agreement.csv", "report.md",
                          "charts/mean_coverage.svg", "charts/label_distribution.svg",
                          "charts/agreement_matrix.svg", "charts/coverage_matrix.svg"}) {
        INFO(f);
        CHECK(std::filesystem::exists(dir / f));
    }
    CHECK(written.size() == 8);
    const json doc = read_json_file(dir / "report.json");
    CHECK(report::analytics_from_json(doc.at("analytics")) == a);
    CHECK(doc.at("metadata").at("config_hash") == "abc");
    CHECK(read_text_file(dir / "charts/mean_coverage.svg").find("<svg xmlns") != std::string::npos);

    testing::TempDir bare;
    report::emit_report(bare.path(), m, a, json::object(), {false});
    CHECK_FALSE(std::filesystem::exists(bare / "charts"));
}

TEST_CASE("doubles are written in shortest round-trip form")
{
    const json j{{"x", 0.1}, {"y", 1.0 / 3.0}};
    const auto text = dump_canonical(j);
    CHECK(text.find("0.1,") != std::string::npos);
    CHECK(json::parse(text).at("y").get<double>() == 1.0 / 3.0);
}
