#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "auditor/coverage.hpp"
#include "auditor/errors.hpp"
#include "auditor/remote_assessor.hpp"

namespace auditor::pipeline {

namespace fs = std::filesystem;

/// Intermediate file names under `<output_dir>/intermediate/`.
inline constexpr const char* kGraphFile = "graph.json";
inline constexpr const char* kRunInfoFile = "run_info.json";
inline constexpr const char* kOccurrencesFile = "occurrences.json";
inline constexpr const char* kRiskFile = "risk.json";
inline constexpr const char* kTechniquesFile = "techniques.json";
inline constexpr const char* kAssessmentsFile = "assessments.json";
inline constexpr const char* kMatrixFile = "coverage_matrix.json";

enum class AssessorMode { Rules, Remote, Both };

std::string_view to_string(AssessorMode m);
/// Throws UsageError.
AssessorMode assessor_mode_from_string(std::string_view s);

struct PipelineConfig {
    std::optional<fs::path> enterprise_bundle;
    std::optional<fs::path> ics_bundle;
    std::optional<fs::path> entities;
    std::optional<fs::path> base_risk;
    std::optional<fs::path> keywords;
    std::optional<fs::path> kb;
    std::optional<fs::path> rule_config;
    std::optional<fs::path> cache_dir;
    std::optional<fs::path> techniques_override;  ///< detect/assess input instead of the persisted file
    std::optional<fs::path> matrix_override;      ///< report input instead of the persisted matrix
    fs::path output_dir = "auditor-out";
    std::string risk_combiner = "multiplicative";
    bool include_partial = true;
    bool strict_entities = false;
    bool charts = true;
    AssessorMode assessor = AssessorMode::Rules;
    std::vector<remote::ModelServiceConfig> model_services;
    coverage::LabelThresholds label_thresholds;
    coverage::Label combination_threshold = coverage::Label::Partial;

    /// Relative paths resolve against `base_dir` (the config file's directory).
    static PipelineConfig from_json(const json& j, const fs::path& base_dir);
    static PipelineConfig load(const fs::path& path);
    json to_json() const;
    /// SHA-256 of the canonical JSON form; embedded in every report.
    std::string hash() const;

    fs::path intermediate(const char* name) const { return output_dir / "intermediate" / name; }
};

/// Creates the transport used by remote assessors; tests substitute fakes.
using TransportFactory = std::function<std::shared_ptr<remote::Transport>(const remote::ModelServiceConfig&)>;

struct Environment {
    TransportFactory transport_factory;
    remote::Clock clock;
};

Environment default_environment();

struct PhaseOutcome {
    std::vector<std::string> warnings;
    std::vector<fs::path> written;
    /// Non-zero when the phase completed but with a degraded result (e.g. unassessed remote pairs).
    int exit_code = 0;
};

PhaseOutcome run_ingest(const PipelineConfig& cfg);
PhaseOutcome run_extract(const PipelineConfig& cfg);
PhaseOutcome run_score(const PipelineConfig& cfg);
PhaseOutcome run_detect(const PipelineConfig& cfg);
PhaseOutcome run_assess(const PipelineConfig& cfg, const Environment& env = default_environment());
PhaseOutcome run_report(const PipelineConfig& cfg);

/// Thrown by run_pipeline; carries the phase that failed.
class PhaseError : public AuditorError {
public:
    PhaseError(std::string phase, const AuditorError& cause);
    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

/// Runs every phase in order: ingest, extract, score, detect, assess, report.
PhaseOutcome run_pipeline(const PipelineConfig& cfg, const Environment& env = default_environment());

}  // namespace auditor::pipeline
