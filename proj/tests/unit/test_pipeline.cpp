#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "auditor/detectability.hpp"
#include "auditor/errors.hpp"
#include "auditor/gap_analysis.hpp"
#include "auditor/json_io.hpp"
#include "auditor/pipeline.hpp"
#include "auditor/report.hpp"
#include "fake_model.hpp"
#include "support.hpp"

using namespace auditor;
using namespace auditor::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineConfig smoke(const fs::path& out)
{
    auto cfg = PipelineConfig::load(testing::fixture("smoke/config.json"));
    cfg.output_dir = out;
    return cfg;
}

struct Run {
    int code = -1;
    std::string output;  // stdout and stderr interleaved
};

Run cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + AUDITOR_CLI + "\" " + args + " 2>&1";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// Environment whose transport factory fails the test if it is ever used.
Environment offline()
{
    Environment env;
    env.transport_factory = [](const remote::ModelServiceConfig&) -> std::shared_ptr<remote::Transport> {
        FAIL("transport constructed during an offline run");
        return nullptr;
    };
    return env;
}

Environment with(std::shared_ptr<testing::FakeModel> fake)
{
    Environment env;
    env.transport_factory = [fake](const remote::ModelServiceConfig&) { return fake; };
    return env;
}

remote::ModelServiceConfig fake_service()
{
    remote::ModelServiceConfig s;
    s.endpoint = "http://model.invalid/v1";
    s.model_name = "fake-1";
    s.max_retries = 0;
    s.rate_limit_requests = 1000;
    return s;
}

}  // namespace

TEST_CASE("smoke run writes every report file")
{
    testing::TempDir dir;
    const auto outcome = run_pipeline(smoke(dir.path()), offline());
    CHECK(outcome.exit_code == 0);
    for (const char* f : {"report.json", "coverage_matrix.csv", "agreement.csv", "report.md", "charts/mean_coverage.svg",
                          "intermediate/graph.json", "intermediate/occurrences.json", "intermediate/risk.json",
                          "intermediate/techniques.json", "intermediate/assessments.json",
                          "intermediate/coverage_matrix.json"}) {
        INFO(f);
        CHECK(fs::exists(dir / f));
    }
    const json report = read_json_file(dir / "report.json");
    const auto& meta = report.at("metadata");
    CHECK(meta.at("config_hash").get<std::string>().size() == 64);
    CHECK(meta.at("assessors") == json::array({"rules-v1"}));
    CHECK(meta.at("bundles").size() == 2);
    CHECK(meta.at("bundles")[0].at("attack_spec_version") == "15.1");
    CHECK(report.at("analytics").at("technique_count") == 5);
}

TEST_CASE("rerun is byte-identical and report-only rerun reproduces analytics")
{
    testing::TempDir a;
    testing::TempDir b;
    run_pipeline(smoke(a.path()), offline());
    run_pipeline(smoke(b.path()), offline());
    CHECK(read_text_file(a / "report.json") == read_text_file(b / "report.json"));
    CHECK(read_text_file(a / "coverage_matrix.csv") == read_text_file(b / "coverage_matrix.csv"));
    CHECK(read_text_file(a / "report.md") == read_text_file(b / "report.md"));

    const std::string before = read_text_file(a / "report.json");
    run_report(smoke(a.path()));
    CHECK(read_text_file(a / "report.json") == before);
}

TEST_CASE("config hash ignores output location")
{
    CHECK(smoke("/tmp/one").hash() == smoke("/tmp/two").hash());
    auto changed = smoke("/tmp/one");
    changed.include_partial = false;
    CHECK(changed.hash() != smoke("/tmp/one").hash());
}

TEST_CASE("missing bundle fails in ingest")
{
    testing::TempDir dir;
    auto cfg = smoke(dir.path());
    cfg.enterprise_bundle = dir / "absent.json";
    try {
        run_pipeline(cfg, offline());
        FAIL("expected a PhaseError");
    } catch (const PhaseError& e) {
        CHECK(e.phase() == "ingest");
        CHECK(e.kind() == ErrorKind::Data);
    }
    const auto r = cli("run --config \"" + testing::fixture("smoke/config.json").string() + "\" --enterprise \"" +
                       (dir / "absent.json").string() + "\" --out \"" + dir.path().string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.output.find("error [ingest]") != std::string::npos);
}

TEST_CASE("detect on a persisted list reproduces the filter exactly")
{
    testing::TempDir dir;
    const auto cfg = smoke(dir.path());
    run_ingest(cfg);
    run_extract(cfg);
    run_detect(cfg);

    const json fixture = read_json_file(testing::fixture("detectability_20.json"));
    std::vector<stix::TechniqueRecord> records;
    for (const auto& r : fixture.at("records")) records.push_back(stix::technique_from_json(r));
    write_json_file(dir / "list.json", json{{"techniques", [&] {
                                                 json a = json::array();
                                                 for (const auto& t : records) a.push_back(stix::to_json(t));
                                                 return a;
                                             }()}});
    auto over = cfg;
    over.techniques_override = dir / "list.json";
    run_detect(over);
    const auto expected = detect::filter_network_detectable(records, detect::KeywordConfig::defaults(), true);
    const json written = read_json_file(cfg.intermediate(kTechniquesFile));
    CHECK(detect::techniques_from_json(written) == expected.kept);
    CHECK(written.at("summary") == detect::to_json(expected).at("summary"));
}

TEST_CASE("rules assessment never builds a transport")
{
    testing::TempDir dir;
    auto cfg = smoke(dir.path());
    cfg.model_services = {fake_service()};  // configured but not selected
    CHECK_NOTHROW(run_pipeline(cfg, offline()));
}

TEST_CASE("report recomputes from a hand-edited matrix")
{
    testing::TempDir dir;
    const auto cfg = smoke(dir.path());
    run_pipeline(cfg, offline());
    json matrix = read_json_file(cfg.intermediate(kMatrixFile));
    for (auto& row : matrix.at("cells"))
        for (auto& c : row) c = "Full";
    write_json_file(dir / "edited.json", matrix);

    auto over = cfg;
    over.matrix_override = dir / "edited.json";
    run_report(over);
    const json report = read_json_file(dir / "report.json");
    for (const auto& s : report.at("analytics").at("dataset_stats")) CHECK(s.at("mean_score") == 1.0);

    const auto r = cli("report --config \"" + testing::fixture("smoke/config.json").string() + "\" --out \"" +
                       dir.path().string() + "\" --matrix \"" + (dir / "edited.json").string() + "\" --no-charts");
    CHECK(r.code == 0);
}

TEST_CASE("remote and combined assessment through the pipeline")
{
    testing::TempDir dir;
    auto cfg = smoke(dir.path());
    cfg.assessor = AssessorMode::Both;
    cfg.model_services = {fake_service()};
    run_ingest(cfg);
    run_extract(cfg);
    run_score(cfg);
    run_detect(cfg);

    auto cold = std::make_shared<testing::FakeModel>();
    CHECK(run_assess(cfg, with(cold)).exit_code == 0);
    CHECK(cold->requests.size() == 2);  // 5 techniques, 2 datasets, one batch each
    const std::string first = read_text_file(cfg.intermediate(kAssessmentsFile));

    auto warm = std::make_shared<testing::FakeModel>();
    run_assess(cfg, with(warm));
    CHECK(warm->requests.empty());
    CHECK(read_text_file(cfg.intermediate(kAssessmentsFile)) == first);
    CHECK(fs::exists(dir / "cache" / "records"));

    run_report(cfg);
    const json report = read_json_file(dir / "report.json");
    CHECK(report.at("metadata").at("assessors").size() == 2);
    CHECK_FALSE(report.at("analytics").at("agreement").is_null());
}

TEST_CASE("unavailable service: run continues, exit code 3")
{
    testing::TempDir dir;
    auto cfg = smoke(dir.path());
    cfg.assessor = AssessorMode::Remote;
    cfg.model_services = {fake_service()};
    auto down = std::make_shared<testing::FakeModel>();
    down->failures = std::vector<int>(10, 503);
    const auto outcome = run_pipeline(cfg, with(down));
    CHECK(outcome.exit_code == 3);
    CHECK(fs::exists(dir / "report.json"));
    const auto m = gaps::CoverageMatrix::from_json(read_json_file(cfg.intermediate(kMatrixFile)));
    for (std::size_t t = 0; t < m.techniques().size(); ++t)
        for (std::size_t d = 0; d < m.datasets().size(); ++d) CHECK(m.cell(t, d) == coverage::Label::Unknown);
}

TEST_CASE("CLI: per-phase commands match the single run")
{
    testing::TempDir whole;
    testing::TempDir phased;
    const std::string config = "--config \"" + testing::fixture("smoke/config.json").string() + "\"";
    CHECK(cli("run " + config + " --out \"" + whole.path().string() + "\"").code == 0);
    for (const char* phase : {"ingest", "extract", "score", "detect", "assess", "report"}) {
        const auto r = cli(std::string(phase) + " " + config + " --out \"" + phased.path().string() + "\"");
        INFO(phase << ": " << r.output);
        CHECK(r.code == 0);
    }
    CHECK(read_text_file(whole / "report.json") == read_text_file(phased / "report.json"));
}

TEST_CASE("CLI: usage errors exit 1")
{
    CHECK(cli("").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("assess --assessor oracle").code == 1);
    CHECK(cli("detect --include-partial maybe").code == 1);
    CHECK(cli("run --config /definitely/not/here.json").code == 1);
    const auto r = cli("score --risk-combiner cubic --out /tmp");
    CHECK(r.code == 1);
    CHECK(r.output.find("cubic") != std::string::npos);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("CLI: include-partial flag changes the kept set")
{
    testing::TempDir dir;
    const std::string base = "--config \"" + testing::fixture("smoke/config.json").string() + "\" --out \"" +
                             dir.path().string() + "\"";
    REQUIRE(cli("ingest " + base).code == 0);
    REQUIRE(cli("extract " + base).code == 0);
    REQUIRE(cli("detect " + base + " --include-partial false").code == 0);
    const json doc = read_json_file(dir / "intermediate" / "techniques.json");
    CHECK(doc.at("summary").at("include_partial") == false);
    CHECK(detect::techniques_from_json(doc).size() == 2);
}

TEST_CASE("config parsing")
{
    testing::TempDir dir;
    write_json_file(dir / "c.json", json{{"bundles", {{"enterprise", "e.json"}}},
                                         {"kb", "kb.json"},
                                         {"output_dir", "out"},
                                         {"assessor", "remote"},
                                         {"thresholds", {{"combination", "Full"}, {"label", {{"full_min", 1.0}}}}},
                                         {"model_services", {{{"endpoint", "http://x/y"}, {"model_name", "m"}}}}});
    const auto cfg = PipelineConfig::load(dir / "c.json");
    CHECK(cfg.enterprise_bundle == dir / "e.json");
    CHECK(cfg.output_dir == dir / "out");
    CHECK(cfg.assessor == AssessorMode::Remote);
    CHECK(cfg.combination_threshold == coverage::Label::Full);
    CHECK(cfg.label_thresholds.full_min == 1.0);
    CHECK(cfg.model_services.size() == 1);

    write_json_file(dir / "bad.json", json{{"assessor", "psychic"}});
    CHECK_THROWS_AS(PipelineConfig::load(dir / "bad.json"), UsageError);
    CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.json"), UsageError);
}
