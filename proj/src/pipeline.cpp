#include "auditor/pipeline.hpp"

#include "auditor/dataset_kb.hpp"
#include "auditor/detectability.hpp"
#include "auditor/gap_analysis.hpp"
#include "auditor/hashing.hpp"
#include "auditor/report.hpp"
#include "auditor/risk.hpp"
#include "auditor/stix.hpp"
#include "auditor/threat_model.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace auditor::pipeline {

namespace {

const fs::path& require(const std::optional<fs::path>& p, const char* setting)
{
    if (!p) {
        throw UsageError(std::string("missing setting '") + setting + "'");
    }
    return *p;
}

std::optional<fs::path> path_setting(const json& j, const char* key, const fs::path& base)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw UsageError(std::string("config: '") + key + "' must be a path string");
    }
    fs::path p = it->get<std::string>();
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

json opt_path(const std::optional<fs::path>& p)
{
    return p ? json(p->string()) : json(nullptr);
}

std::vector<stix::TechniqueRecord> load_kept_techniques(const PipelineConfig& cfg)
{
    const fs::path path = cfg.techniques_override.value_or(cfg.intermediate(kTechniquesFile));
    return detect::techniques_from_json(read_json_file(path));
}

coverage::RuleConfig load_rule_config(const PipelineConfig& cfg)
{
    coverage::RuleConfig rules = cfg.rule_config ? coverage::RuleConfig::from_json(read_json_file(*cfg.rule_config))
                                                 : coverage::RuleConfig::defaults();
    rules.thresholds = cfg.label_thresholds;
    return rules;
}

std::vector<remote::ModelServiceConfig> effective_services(const PipelineConfig& cfg)
{
    std::vector<remote::ModelServiceConfig> out = cfg.model_services;
    for (auto& s : out) {
        if (cfg.cache_dir) {
            s.cache_dir = *cfg.cache_dir;
        } else if (s.cache_dir.empty()) {
            s.cache_dir = cfg.output_dir / "cache";
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(AssessorMode m)
{
    switch (m) {
        case AssessorMode::Rules: return "rules";
        case AssessorMode::Remote: return "remote";
        case AssessorMode::Both: return "both";
    }
    return "rules";
}

AssessorMode assessor_mode_from_string(std::string_view s)
{
    if (s == "rules") return AssessorMode::Rules;
    if (s == "remote") return AssessorMode::Remote;
    if (s == "both") return AssessorMode::Both;
    throw UsageError("unknown assessor '" + std::string(s) + "' (expected rules, remote or both)");
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object()) {
        throw UsageError("config must be a JSON object");
    }
    PipelineConfig c;
    try {
        if (auto b = j.find("bundles"); b != j.end()) {
            c.enterprise_bundle = path_setting(*b, "enterprise", base_dir);
            c.ics_bundle = path_setting(*b, "ics", base_dir);
        }
        c.entities = path_setting(j, "entities", base_dir);
        c.base_risk = path_setting(j, "base_risk", base_dir);
        c.keywords = path_setting(j, "keywords", base_dir);
        c.kb = path_setting(j, "kb", base_dir);
        c.rule_config = path_setting(j, "rule_config", base_dir);
        c.cache_dir = path_setting(j, "cache_dir", base_dir);
        if (auto out = path_setting(j, "output_dir", base_dir)) {
            c.output_dir = *out;
        } else {
            c.output_dir = (base_dir / c.output_dir).lexically_normal();
        }
        c.risk_combiner = j.value("risk_combiner", c.risk_combiner);
        c.include_partial = j.value("include_partial", c.include_partial);
        c.strict_entities = j.value("strict_entities", c.strict_entities);
        c.charts = j.value("charts", c.charts);
        c.assessor = assessor_mode_from_string(j.value("assessor", std::string("rules")));
        if (auto ms = j.find("model_services"); ms != j.end()) {
            for (const auto& s : *ms) {
                auto svc = remote::ModelServiceConfig::from_json(s);
                if (!svc.cache_dir.empty() && svc.cache_dir.is_relative()) {
                    svc.cache_dir = (base_dir / svc.cache_dir).lexically_normal();
                }
                c.model_services.push_back(std::move(svc));
            }
        }
        if (auto th = j.find("thresholds"); th != j.end()) {
            if (th->contains("label")) {
                c.label_thresholds = coverage::LabelThresholds::from_json(th->at("label"));
            }
            if (th->contains("combination")) {
                c.combination_threshold = coverage::label_from_string(th->at("combination").get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const SchemaViolation& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path)
{
    json j;
    try {
        j = read_json_file(path);
    } catch (const AuditorError& e) {
        throw UsageError(std::string("cannot load config: ") + e.what());
    }
    return from_json(j, fs::absolute(path).parent_path());
}

json PipelineConfig::to_json() const
{
    json services = json::array();
    for (const auto& s : model_services) services.push_back(s.to_json());
    return json{{"bundles", {{"enterprise", opt_path(enterprise_bundle)}, {"ics", opt_path(ics_bundle)}}},
                {"entities", opt_path(entities)},
                {"base_risk", opt_path(base_risk)},
                {"keywords", opt_path(keywords)},
                {"kb", opt_path(kb)},
                {"rule_config", opt_path(rule_config)},
                {"cache_dir", opt_path(cache_dir)},
                {"output_dir", output_dir.string()},
                {"risk_combiner", risk_combiner},
                {"include_partial", include_partial},
                {"strict_entities", strict_entities},
                {"charts", charts},
                {"assessor", std::string(pipeline::to_string(assessor))},
                {"model_services", services},
                {"thresholds",
                 {{"label", label_thresholds.to_json()},
                  {"combination", std::string(coverage::to_string(combination_threshold))}}}};
}

std::string PipelineConfig::hash() const
{
    // Inputs are identified by content so the hash does not depend on where the checkout lives.
    const auto content_id = [](const json& v) -> json {
        if (!v.is_string()) return v;
        const fs::path p = v.get<std::string>();
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) return p.filename().string();
        return "sha256:" + sha256_hex(read_text_file(p));
    };
    json j = to_json();
    j.erase("output_dir");
    j.erase("cache_dir");
    for (const char* key : {"entities", "base_risk", "keywords", "kb", "rule_config"}) {
        j[key] = content_id(j[key]);
    }
    for (auto& [key, value] : j["bundles"].items()) {
        value = content_id(value);
    }
    for (auto& svc : j["model_services"]) {
        svc.erase("cache_dir");
    }
    return sha256_hex(j.dump());
}

Environment default_environment()
{
    Environment env;
    env.transport_factory = [](const remote::ModelServiceConfig& c) {
        return std::make_shared<remote::HttpTransport>(c.timeout_seconds);
    };
    return env;
}

// ---------------------------------------------------------------------------

PhaseOutcome run_ingest(const PipelineConfig& cfg)
{
    if (!cfg.enterprise_bundle && !cfg.ics_bundle) {
        throw UsageError("missing setting 'bundles' (need an enterprise and/or ics bundle path)");
    }
    PhaseOutcome out;
    std::optional<stix::StixObjectGraph> graph;
    for (const auto& [path, matrix] : {std::pair{cfg.enterprise_bundle, stix::Matrix::Enterprise},
                                       std::pair{cfg.ics_bundle, stix::Matrix::ICS}}) {
        if (!path) continue;
        auto g = stix::parse_bundle(read_text_file(*path), matrix);
        graph = graph ? stix::merge_matrices(*graph, g) : std::move(g);
    }
    out.warnings = graph->warnings;

    json bundles = json::array();
    for (const auto& b : graph->bundles) {
        bundles.push_back({{"matrix", std::string(stix::to_string(b.matrix))},
                           {"bundle_id", b.bundle_id},
                           {"attack_spec_version", b.attack_spec_version},
                           {"modified", b.modified},
                           {"object_count", b.object_count}});
    }
    const json run_info{{"bundles", bundles},
                        {"technique_count", graph->techniques.size()},
                        {"entity_count", graph->entities.size()},
                        {"uses_edge_count", graph->uses_edges.size()}};

    write_json_file(cfg.intermediate(kGraphFile), stix::to_json(*graph));
    write_json_file(cfg.intermediate(kRunInfoFile), run_info);
    out.written = {cfg.intermediate(kGraphFile), cfg.intermediate(kRunInfoFile)};
    return out;
}

PhaseOutcome run_extract(const PipelineConfig& cfg)
{
    const auto graph = stix::graph_from_json(read_json_file(cfg.intermediate(kGraphFile)));
    const auto selection = cfg.entities ? threat::EntitySelection::from_json(read_json_file(*cfg.entities))
                                        : threat::default_energy_selection();
    const auto occurrences = threat::build_occurrence_map(graph, selection, cfg.strict_entities);

    json doc = occurrences.to_json();
    doc["selection"] = selection.to_json();
    doc["campaign_handling"] = "direct uses edges only; group techniques are not attributed to campaigns";
    write_json_file(cfg.intermediate(kOccurrencesFile), doc);

    PhaseOutcome out;
    out.warnings = occurrences.warnings;
    out.written = {cfg.intermediate(kOccurrencesFile)};
    return out;
}

PhaseOutcome run_score(const PipelineConfig& cfg)
{
    const auto occurrences = threat::OccurrenceMap::from_json(read_json_file(cfg.intermediate(kOccurrencesFile)));
    const auto table =
        cfg.base_risk ? risk::BaseRiskTable::from_json(read_json_file(*cfg.base_risk)) : risk::BaseRiskTable{};
    const auto ranked = risk::rank_techniques(occurrences, table, cfg.risk_combiner);

    json rows = json::array();
    for (const auto& p : ranked) rows.push_back(risk::to_json(p));
    write_json_file(cfg.intermediate(kRiskFile),
                    json{{"combiner", cfg.risk_combiner},
                         {"formula", risk::combiner_formula(cfg.risk_combiner)},
                         {"base_risk_default", table.default_value()},
                         {"ranking", rows}});
    PhaseOutcome out;
    out.written = {cfg.intermediate(kRiskFile)};
    return out;
}

PhaseOutcome run_detect(const PipelineConfig& cfg)
{
    std::vector<stix::TechniqueRecord> records;
    if (cfg.techniques_override) {
        records = detect::techniques_from_json(read_json_file(*cfg.techniques_override));
    } else {
        const auto graph = stix::graph_from_json(read_json_file(cfg.intermediate(kGraphFile)));
        const auto occurrences = threat::OccurrenceMap::from_json(read_json_file(cfg.intermediate(kOccurrencesFile)));
        for (const auto& [id, users] : occurrences.users) {
            auto it = graph.techniques.find(id);
            if (it == graph.techniques.end()) {
                throw SchemaViolation("occurrence map names technique " + id + " missing from the graph");
            }
            records.push_back(it->second);
        }
    }
    const auto keywords =
        cfg.keywords ? detect::KeywordConfig::from_json(read_json_file(*cfg.keywords)) : detect::KeywordConfig::defaults();
    const auto result = detect::filter_network_detectable(records, keywords, cfg.include_partial);

    json doc = detect::to_json(result);
    doc["keywords"] = keywords.to_json();
    write_json_file(cfg.intermediate(kTechniquesFile), doc);
    PhaseOutcome out;
    out.written = {cfg.intermediate(kTechniquesFile)};
    return out;
}

PhaseOutcome run_assess(const PipelineConfig& cfg, const Environment& env)
{
    const auto techniques = load_kept_techniques(cfg);
    const auto kb = kb::load_profiles(require(cfg.kb, "kb"));
    if (kb.profiles.empty()) {
        throw SchemaViolation("knowledge base has no profiles");
    }

    PhaseOutcome out;
    std::vector<std::vector<coverage::AssessmentRecord>> sets;
    json assessors = json::array();

    if (cfg.assessor == AssessorMode::Rules || cfg.assessor == AssessorMode::Both) {
        const auto rules = load_rule_config(cfg);
        std::vector<coverage::AssessmentRecord> records;
        for (const auto& t : techniques) {
            for (const auto& p : kb.profiles) {
                records.push_back(coverage::assess_rule_based(t, p, rules));
            }
        }
        json rj = json::array();
        for (const auto& r : records) rj.push_back(coverage::to_json(r));
        assessors.push_back({{"assessor_id", coverage::kRuleAssessorId},
                             {"kind", "rules"},
                             {"config_hash", sha256_hex(rules.to_json().dump())},
                             {"records", rj}});
        sets.push_back(std::move(records));
    }

    if (cfg.assessor == AssessorMode::Remote || cfg.assessor == AssessorMode::Both) {
        const auto services = effective_services(cfg);
        if (services.empty()) {
            throw UsageError("remote assessment requested but no model_services configured");
        }
        for (const auto& svc : services) {
            remote::RemoteAssessor assessor(svc, env.transport_factory(svc), env.clock, cfg.label_thresholds);
            std::vector<coverage::AssessmentRecord> records;
            remote::RemoteStats total;
            for (const auto& p : kb.profiles) {
                auto result = assessor.assess(techniques, p);
                total.cache_hits += result.stats.cache_hits;
                total.batches += result.stats.batches;
                total.requests += result.stats.requests;
                total.retries += result.stats.retries;
                total.malformed += result.stats.malformed;
                total.unassessed += result.stats.unassessed;
                records.insert(records.end(), result.records.begin(), result.records.end());
            }
            // Records are keyed by pair; order them (technique, dataset) like the rule set.
            std::vector<coverage::AssessmentRecord> ordered;
            for (const auto& t : techniques) {
                for (const auto& p : kb.profiles) {
                    for (const auto& r : records) {
                        if (r.attack_id == t.attack_id && r.dataset_name == p.name) {
                            ordered.push_back(r);
                            break;
                        }
                    }
                }
            }
            if (total.unassessed > 0) {
                out.exit_code = exit_code_for(ErrorKind::Remote);
                out.warnings.push_back(fmt::format("ServiceUnavailable: {} pairs left unassessed by {}",
                                                   total.unassessed, svc.effective_assessor_id()));
            }
            if (total.malformed > 0) {
                out.warnings.push_back(fmt::format("MalformedResponse: {} pairs from {} recorded as Unknown",
                                                   total.malformed, svc.effective_assessor_id()));
            }
            json rj = json::array();
            for (const auto& r : ordered) rj.push_back(coverage::to_json(r));
            // Request counters vary between cold and warm runs, so they are reported on stderr only.
            out.warnings.push_back(fmt::format("{}: {} cache hits, {} requests in {} batches, {} retries",
                                               svc.effective_assessor_id(), total.cache_hits, total.requests,
                                               total.batches, total.retries));
            assessors.push_back({{"assessor_id", svc.effective_assessor_id()},
                                 {"kind", "remote"},
                                 {"service", svc.to_json()},
                                 {"prompt_template", remote::kPromptTemplateVersion},
                                 {"prompt_template_hash", remote::prompt_template_hash()},
                                 {"records", rj}});
            sets.push_back(std::move(ordered));
        }
    }

    std::vector<std::string> technique_ids;
    for (const auto& t : techniques) technique_ids.push_back(t.attack_id);
    std::vector<std::string> dataset_names;
    json datasets = json::array();
    for (const auto& p : kb.profiles) {
        dataset_names.push_back(p.name);
        datasets.push_back({{"name", p.name}, {"limitations", p.limitations}, {"profile_hash", kb::profile_hash(p)}});
    }
    const auto matrix = gaps::CoverageMatrix::from_records(technique_ids, dataset_names, sets);

    json matrix_doc = matrix.to_json();
    json ids = json::array();
    for (const auto& a : assessors) ids.push_back(a.at("assessor_id"));
    matrix_doc["assessors"] = ids;
    matrix_doc["reconciliation"] = "minimum label under No < Unknown < Partial < Full";

    write_json_file(cfg.intermediate(kAssessmentsFile),
                    json{{"assessors", assessors}, {"datasets", datasets}, {"kb_schema_version", kb.schema_version}});
    write_json_file(cfg.intermediate(kMatrixFile), matrix_doc);
    out.written = {cfg.intermediate(kAssessmentsFile), cfg.intermediate(kMatrixFile)};
    return out;
}

PhaseOutcome run_report(const PipelineConfig& cfg)
{
    const json matrix_doc = read_json_file(cfg.matrix_override.value_or(cfg.intermediate(kMatrixFile)));
    const auto matrix = gaps::CoverageMatrix::from_json(matrix_doc);

    std::vector<std::vector<coverage::AssessmentRecord>> sets;
    json metadata = json::object();
    metadata["config_hash"] = cfg.hash();
    metadata["assessors"] = matrix_doc.value("assessors", json::array());

    const auto assessments_path = cfg.intermediate(kAssessmentsFile);
    if (fs::exists(assessments_path)) {
        const json doc = read_json_file(assessments_path);
        for (const auto& a : doc.at("assessors")) {
            std::vector<coverage::AssessmentRecord> records;
            for (const auto& r : a.at("records")) records.push_back(coverage::record_from_json(r));
            sets.push_back(std::move(records));
            if (a.contains("prompt_template_hash")) {
                metadata["prompt_template_hash"] = a.at("prompt_template_hash");
            }
        }
        metadata["datasets"] = doc.value("datasets", json::array());
    }
    // Agreement is only meaningful over the same key space as the matrix being reported.
    for (auto& set : sets) {
        std::vector<coverage::AssessmentRecord> kept;
        for (auto& r : set) {
            const auto& ts = matrix.techniques();
            const auto& ds = matrix.datasets();
            if (std::find(ts.begin(), ts.end(), r.attack_id) != ts.end() &&
                std::find(ds.begin(), ds.end(), r.dataset_name) != ds.end()) {
                kept.push_back(std::move(r));
            }
        }
        set = std::move(kept);
    }

    std::vector<risk::RiskProfile> ranking;
    if (const auto risk_path = cfg.intermediate(kRiskFile); fs::exists(risk_path)) {
        const json doc = read_json_file(risk_path);
        for (const auto& r : doc.at("ranking")) ranking.push_back(risk::risk_profile_from_json(r));
        metadata["risk_combiner"] = {{"name", doc.value("combiner", "")}, {"formula", doc.value("formula", "")}};
    }
    if (const auto info_path = cfg.intermediate(kRunInfoFile); fs::exists(info_path)) {
        metadata["bundles"] = read_json_file(info_path).at("bundles");
    }
    if (const auto tech_path = cfg.intermediate(kTechniquesFile); fs::exists(tech_path)) {
        metadata["detectability"] = read_json_file(tech_path).at("summary");
    }
    metadata["label_thresholds"] = cfg.label_thresholds.to_json();
    metadata["combination_threshold"] = std::string(coverage::to_string(cfg.combination_threshold));
    metadata["notes"] = json::array({
        "Coverage threshold for combinations defaults to Partial (inferred; configurable).",
        "Campaign techniques count direct uses edges only.",
        "Score-to-label thresholds and the weighted-risk formula are toolkit conventions.",
    });

    const auto analytics = report::compute_analytics(matrix, sets, ranking, cfg.combination_threshold);
    PhaseOutcome out;
    out.written = report::emit_report(cfg.output_dir, matrix, analytics, metadata, {cfg.charts});
    return out;
}

PhaseError::PhaseError(std::string phase, const AuditorError& cause)
    : AuditorError(cause.kind(), cause.what()), phase_(std::move(phase))
{
}

PhaseOutcome run_pipeline(const PipelineConfig& cfg, const Environment& env)
{
    PhaseOutcome total;
    const std::vector<std::pair<const char*, std::function<PhaseOutcome()>>> phases{
        {"ingest", [&] { return run_ingest(cfg); }},
        {"extract", [&] { return run_extract(cfg); }},
        {"score", [&] { return run_score(cfg); }},
        {"detect", [&] { return run_detect(cfg); }},
        {"assess", [&] { return run_assess(cfg, env); }},
        {"report", [&] { return run_report(cfg); }},
    };
    for (const auto& [name, fn] : phases) {
        PhaseOutcome o;
        try {
            o = fn();
        } catch (const AuditorError& e) {
            throw PhaseError(name, e);
        }
        for (auto& w : o.warnings) total.warnings.push_back(std::string(name) + ": " + w);
        total.written.insert(total.written.end(), o.written.begin(), o.written.end());
        total.exit_code = std::max(total.exit_code, o.exit_code);
    }
    return total;
}

}  // namespace auditor::pipeline
