#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "auditor/threat_model.hpp"

namespace auditor::risk {

struct RiskProfile {
    std::string attack_id;
    std::size_t occurrence_count = 0;
    double frequency_score = 0.0;
    double base_risk = 0.0;
    double weighted_risk = 0.0;
    std::string combiner;

    friend bool operator==(const RiskProfile&, const RiskProfile&) = default;
};

class BaseRiskTable {
public:
    static constexpr double kMin = 1.0;
    static constexpr double kMax = 10.0;

    explicit BaseRiskTable(double default_value = 5.0, std::map<std::string, double> values = {});

    double default_value() const noexcept { return default_value_; }
    const std::map<std::string, double>& values() const noexcept { return values_; }
    double lookup(const std::string& attack_id) const;

    /// `{"T1021.002": 8.5, ..., "_default": 5.0}`. Throws SchemaViolation.
    static BaseRiskTable from_json(const json& j);
    json to_json() const;

private:
    double default_value_;
    std::map<std::string, double> values_;
};

/// log2(occurrence_count + 1).
double frequency_score(std::uint64_t occurrence_count);

/// Names accepted by weighted_risk. "multiplicative" is the default:
/// base * (0.5 + 0.1 * frequency).
std::vector<std::string> combiner_names();
inline constexpr const char* kDefaultCombiner = "multiplicative";
/// Human-readable formula for reports.
std::string combiner_formula(const std::string& combiner);

/// Throws UnknownCombiner.
double weighted_risk(double base_risk, double frequency, const std::string& combiner = kDefaultCombiner);

/// Descending weighted risk, ties by ascending attack_id.
std::vector<RiskProfile> rank_techniques(const threat::OccurrenceMap& occurrences, const BaseRiskTable& table,
                                         const std::string& combiner = kDefaultCombiner);

json to_json(const RiskProfile& p);
RiskProfile risk_profile_from_json(const json& j);

}  // namespace auditor::risk
