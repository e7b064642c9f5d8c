#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "auditor/coverage.hpp"

namespace auditor::gaps {

using coverage::Label;

/// Reconciled label for every (technique, dataset) pair, row-major by technique.
class CoverageMatrix {
public:
    CoverageMatrix() = default;
    /// Every cell starts as Unknown. Throws SchemaViolation on duplicate rows/columns.
    CoverageMatrix(std::vector<std::string> techniques, std::vector<std::string> datasets);

    const std::vector<std::string>& techniques() const noexcept { return techniques_; }
    const std::vector<std::string>& datasets() const noexcept { return datasets_; }
    bool empty() const noexcept { return techniques_.empty() || datasets_.empty(); }

    Label cell(std::size_t technique, std::size_t dataset) const;
    Label cell(const std::string& technique, const std::string& dataset) const;
    void set(std::size_t technique, std::size_t dataset, Label label);
    void set(const std::string& technique, const std::string& dataset, Label label);

    std::size_t technique_index(const std::string& id) const;
    /// Throws UnknownDataset.
    std::size_t dataset_index(const std::string& name) const;

    /// Reconciles every assessor's records into one matrix; pairs nobody assessed stay Unknown.
    static CoverageMatrix from_records(const std::vector<std::string>& techniques,
                                       const std::vector<std::string>& datasets,
                                       const std::vector<std::vector<coverage::AssessmentRecord>>& assessor_sets);

    json to_json() const;
    static CoverageMatrix from_json(const json& j);

    friend bool operator==(const CoverageMatrix&, const CoverageMatrix&) = default;

private:
    std::vector<std::string> techniques_;
    std::vector<std::string> datasets_;
    std::vector<Label> cells_;
};

struct DatasetStats {
    std::string dataset;
    double mean_score = 0.0;
    std::size_t full_count = 0;
    double full_fraction = 0.0;
    std::map<Label, std::size_t> label_histogram;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// One entry per dataset, in matrix column order. Throws EmptyMatrix.
std::vector<DatasetStats> dataset_stats(const CoverageMatrix& matrix);

struct CombinationResult {
    std::vector<std::string> subset;  ///< sorted by name
    std::size_t covered_count = 0;
    double coverage_fraction = 0.0;
    std::vector<std::string> covered_ids;
    std::vector<std::string> uncovered_ids;
    bool heuristic = false;

    friend bool operator==(const CombinationResult&, const CombinationResult&) = default;
};

/// A technique is covered when its best label over `subset` reaches `threshold`.
/// Throws UnknownDataset, or UsageError for an empty subset.
CombinationResult combination_coverage(const CoverageMatrix& matrix, const std::set<std::string>& subset,
                                       Label threshold = Label::Partial);

inline constexpr std::size_t kExhaustiveLimit = 12;

/// Optimal size-k subset (exhaustive up to kExhaustiveLimit datasets, greedy above);
/// ties go to the lexicographically smallest sorted name list.
CombinationResult best_combination(const CoverageMatrix& matrix, std::size_t k, Label threshold = Label::Partial);
/// Max-marginal-gain selection; always flagged heuristic.
CombinationResult greedy_combination(const CoverageMatrix& matrix, std::size_t k, Label threshold = Label::Partial);
/// Every subset of size k, best first.
std::vector<CombinationResult> ranked_combinations(const CoverageMatrix& matrix, std::size_t k,
                                                   Label threshold = Label::Partial);

struct TechniqueGaps {
    std::vector<std::string> uncovered_everywhere;  ///< best label is Unknown or No
    std::vector<std::string> minimal_coverage;      ///< at most one Partial and no Full

    friend bool operator==(const TechniqueGaps&, const TechniqueGaps&) = default;
};

TechniqueGaps technique_gaps(const CoverageMatrix& matrix);

struct AgreementMatrix {
    std::string assessor_a;
    std::string assessor_b;
    std::map<std::string, double> per_dataset;  ///< agreement rate in [0, 1]
    std::map<std::string, std::size_t> pairs_per_dataset;
    double overall_rate = 0.0;  ///< pooled over all pairs
    std::size_t pairs = 0;

    friend bool operator==(const AgreementMatrix&, const AgreementMatrix&) = default;
};

/// Exact-label agreement of two assessors over the same (technique, dataset) keys. Throws KeyMismatch.
AgreementMatrix agreement(const std::vector<coverage::AssessmentRecord>& a,
                          const std::vector<coverage::AssessmentRecord>& b);

/// Fraction of techniques covered (>= threshold) by both datasets; diagonal is the dataset's own share.
std::vector<std::vector<double>> dataset_overlap(const CoverageMatrix& matrix, Label threshold = Label::Partial);

json to_json(const DatasetStats& s);
DatasetStats dataset_stats_from_json(const json& j);
json to_json(const CombinationResult& c);
CombinationResult combination_from_json(const json& j);
json to_json(const TechniqueGaps& g);
TechniqueGaps gaps_from_json(const json& j);
json to_json(const AgreementMatrix& a);
AgreementMatrix agreement_from_json(const json& j);

}  // namespace auditor::gaps
