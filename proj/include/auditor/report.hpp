#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "auditor/gap_analysis.hpp"
#include "auditor/risk.hpp"

namespace auditor::report {

struct RiskCoveragePoint {
    std::string attack_id;
    double weighted_risk = 0.0;
    double mean_coverage = 0.0;  ///< mean label value across datasets

    friend bool operator==(const RiskCoveragePoint&, const RiskCoveragePoint&) = default;
};

/// Everything the report renders, computed from one coverage matrix.
struct Analytics {
    std::size_t technique_count = 0;
    coverage::Label combination_threshold = coverage::Label::Partial;
    std::vector<gaps::DatasetStats> stats;
    std::vector<gaps::CombinationResult> best_by_size;  ///< index k-1 holds the best size-k subset
    std::vector<gaps::CombinationResult> pair_ranking;  ///< all two-dataset combinations, best first
    gaps::TechniqueGaps technique_gaps;
    std::optional<gaps::AgreementMatrix> agreement;
    std::vector<std::vector<double>> dataset_overlap;
    std::vector<RiskCoveragePoint> risk_coverage;
    std::optional<double> risk_coverage_correlation;  ///< Pearson r; absent when undefined

    friend bool operator==(const Analytics&, const Analytics&) = default;
};

/// `assessor_records` are the per-assessor record sets; agreement is computed between the
/// first two when present. `risk` may be empty.
Analytics compute_analytics(const gaps::CoverageMatrix& matrix,
                            const std::vector<std::vector<coverage::AssessmentRecord>>& assessor_records,
                            const std::vector<risk::RiskProfile>& risk, coverage::Label threshold);

json to_json(const Analytics& a);
Analytics analytics_from_json(const json& j);

std::string coverage_matrix_csv(const gaps::CoverageMatrix& matrix);
/// Diagonal: assessor agreement (blank without two assessors); off-diagonal: share of techniques both cover.
std::string agreement_csv(const gaps::CoverageMatrix& matrix, const Analytics& a);
std::string markdown(const Analytics& a, const json& metadata);

struct EmitOptions {
    bool charts = true;
};

/// Writes report.json, coverage_matrix.csv, agreement.csv, report.md and charts/*.svg.
/// Returns the written paths. Throws IoFailure.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& out_dir, const gaps::CoverageMatrix& matrix,
                                               const Analytics& analytics, const json& metadata,
                                               const EmitOptions& options = {});

}  // namespace auditor::report
