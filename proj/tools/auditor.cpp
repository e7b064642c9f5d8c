#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "auditor/errors.hpp"
#include "auditor/pipeline.hpp"
#include "auditor/risk.hpp"

namespace fs = std::filesystem;
using namespace auditor;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string enterprise;
    std::string ics;
    std::string entities;
    std::string risk_combiner;
    std::string include_partial;
    std::string assessor;
    std::string kb;
    std::string techniques;
    std::string cache;
    std::string matrix;
    bool no_charts = false;
};

std::optional<fs::path> shipped(const char* relative)
{
    fs::path p = fs::path(AUDITOR_DATA_DIR) / relative;
    if (fs::exists(p)) return p;
    return std::nullopt;
}

pipeline::PipelineConfig resolve(const Flags& f)
{
    pipeline::PipelineConfig cfg;
    if (!f.config.empty()) {
        cfg = pipeline::PipelineConfig::load(f.config);
    } else {
        cfg.kb = shipped("kb/datasets_v1.json");
        cfg.keywords = shipped("keywords_default.json");
    }
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (!f.enterprise.empty()) cfg.enterprise_bundle = f.enterprise;
    if (!f.ics.empty()) cfg.ics_bundle = f.ics;
    if (!f.entities.empty()) cfg.entities = f.entities;
    if (!f.risk_combiner.empty()) cfg.risk_combiner = f.risk_combiner;
    if (!f.include_partial.empty()) cfg.include_partial = f.include_partial == "true";
    if (!f.assessor.empty()) cfg.assessor = pipeline::assessor_mode_from_string(f.assessor);
    if (!f.kb.empty()) cfg.kb = f.kb;
    if (!f.techniques.empty()) cfg.techniques_override = f.techniques;
    if (!f.cache.empty()) cfg.cache_dir = f.cache;
    if (!f.matrix.empty()) cfg.matrix_override = f.matrix;
    if (f.no_charts) cfg.charts = false;

    // Combiner names are checked up front so a typo is a usage error, not a failure mid-run.
    const auto names = risk::combiner_names();
    if (std::find(names.begin(), names.end(), cfg.risk_combiner) == names.end()) {
        throw UnknownCombiner("unknown risk combiner '" + cfg.risk_combiner + "'");
    }
    return cfg;
}

int finish(const std::string& phase, const pipeline::PhaseOutcome& outcome)
{
    for (const auto& w : outcome.warnings) {
        std::cerr << "warning [" << phase << "]: " << w << '\n';
    }
    for (const auto& p : outcome.written) {
        std::cout << p.string() << '\n';
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ATT&CK technique coverage auditor for NIDS datasets"};
    app.require_subcommand(1);
    Flags flags;

    const std::map<std::string, std::string> descriptions{
        {"ingest", "parse and merge the Enterprise/ICS STIX bundles"},
        {"extract", "collect techniques used by the selected threat entities"},
        {"score", "rank techniques by weighted risk"},
        {"detect", "keep network-detectable techniques"},
        {"assess", "label technique/dataset coverage"},
        {"report", "compute analytics and write report files"},
        {"run", "all phases in order"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, text] : descriptions) {
        auto* sub = app.add_subcommand(name, text);
        sub->add_option("--config", flags.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory");
        subs[name] = sub;
    }
    for (const char* name : {"ingest", "run"}) {
        subs[name]->add_option("--enterprise", flags.enterprise, "Enterprise ATT&CK bundle");
        subs[name]->add_option("--ics", flags.ics, "ICS ATT&CK bundle");
    }
    for (const char* name : {"extract", "run"}) {
        subs[name]->add_option("--entities", flags.entities, "entity selection (JSON array of ids)");
    }
    for (const char* name : {"score", "run"}) {
        subs[name]->add_option("--risk-combiner", flags.risk_combiner, "multiplicative | additive");
    }
    for (const char* name : {"detect", "run"}) {
        subs[name]
            ->add_option("--include-partial", flags.include_partial, "keep Partial-class techniques")
            ->check(CLI::IsMember({"true", "false"}));
    }
    for (const char* name : {"detect", "assess"}) {
        subs[name]->add_option("--techniques", flags.techniques, "technique list overriding the persisted one");
    }
    for (const char* name : {"assess", "run"}) {
        subs[name]
            ->add_option("--assessor", flags.assessor, "rules | remote | both")
            ->check(CLI::IsMember({"rules", "remote", "both"}));
        subs[name]->add_option("--kb", flags.kb, "dataset knowledge base");
        subs[name]->add_option("--cache", flags.cache, "response cache directory");
    }
    subs["report"]->add_option("--matrix", flags.matrix, "coverage matrix overriding the persisted one");
    for (const char* name : {"report", "run"}) {
        subs[name]->add_flag("--no-charts", flags.no_charts, "skip SVG charts");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code_for(ErrorKind::Usage);
    }

    std::string phase;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) phase = name;
    }

    try {
        const auto cfg = resolve(flags);
        if (phase == "run") return finish(phase, pipeline::run_pipeline(cfg));
        if (phase == "ingest") return finish(phase, pipeline::run_ingest(cfg));
        if (phase == "extract") return finish(phase, pipeline::run_extract(cfg));
        if (phase == "score") return finish(phase, pipeline::run_score(cfg));
        if (phase == "detect") return finish(phase, pipeline::run_detect(cfg));
        if (phase == "assess") return finish(phase, pipeline::run_assess(cfg));
        return finish(phase, pipeline::run_report(cfg));
    } catch (const pipeline::PhaseError& e) {
        std::cerr << "error [" << e.phase() << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const AuditorError& e) {
        std::cerr << "error [" << phase << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error [" << phase << "]: " << e.what() << '\n';
        return exit_code_for(ErrorKind::Data);
    }
}
