#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "auditor/dataset_kb.hpp"
#include "auditor/stix.hpp"

namespace auditor::coverage {

enum class Answer { Yes, No, Unknown };

std::string_view to_string(Answer a);
Answer answer_from_string(std::string_view s);

/// Index of each coverage question inside a CriteriaVector.
enum class Criterion : std::size_t {
    AttackTypePresent = 0,
    ProtocolRecorded = 1,
    DomainMatch = 2,
    FeatureSufficiency = 3,
    ExampleAdequacy = 4,
};

inline constexpr std::size_t kCriteriaCount = 5;

std::string_view to_string(Criterion c);

struct CriteriaVector {
    std::array<Answer, kCriteriaCount> answers{Answer::Unknown, Answer::Unknown, Answer::Unknown, Answer::Unknown,
                                               Answer::Unknown};

    Answer& operator[](Criterion c) { return answers[static_cast<std::size_t>(c)]; }
    Answer operator[](Criterion c) const { return answers[static_cast<std::size_t>(c)]; }

    std::size_t count(Answer a) const;

    friend bool operator==(const CriteriaVector&, const CriteriaVector&) = default;
};

/// Declared in reconciliation order: No < Unknown < Partial < Full.
enum class Label { No = 0, Unknown = 1, Partial = 2, Full = 3 };

inline constexpr std::array<Label, 4> kAllLabels{Label::No, Label::Unknown, Label::Partial, Label::Full};

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);
/// Full 1.0, Partial 0.5, No 0.0, Unknown 0.25.
double numeric_value(Label l);

/// 0.2 per Yes; Unknown and No contribute nothing.
double score_criteria(const CriteriaVector& criteria);

struct LabelThresholds {
    double full_min = 0.8;
    double partial_min = 0.4;
    /// Scores at or below this with at least `unknown_min_count` Unknown answers are labelled Unknown.
    double unknown_max_score = 0.2;
    int unknown_min_count = 3;

    static LabelThresholds from_json(const json& j);
    json to_json() const;
};

/// Throws InvalidScore unless score is a multiple of 0.2 in [0, 1] and unknown_count in [0, 5].
Label label_from_score(double score, int unknown_count, const LabelThresholds& thresholds = {});

/// The more cautious of two labels.
Label reconcile(Label a, Label b);

enum class RecordStatus {
    Assessed,
    Malformed,   ///< response could not be parsed; raw text archived
    Unassessed,  ///< service unavailable after retries
};

std::string_view to_string(RecordStatus s);

struct AssessmentRecord {
    std::string attack_id;
    std::string dataset_name;
    std::string assessor_id;
    CriteriaVector criteria;
    double score = 0.0;
    Label label = Label::Unknown;
    std::string rationale;
    std::string cache_key;
    RecordStatus status = RecordStatus::Assessed;

    friend bool operator==(const AssessmentRecord&, const AssessmentRecord&) = default;
};

json to_json(const AssessmentRecord& r);
AssessmentRecord record_from_json(const json& j);

/// Fills score and label from the criteria.
void finalize(AssessmentRecord& r, const LabelThresholds& thresholds);

/// Protocol name plus the spellings that identify it in free text.
struct ProtocolAlias {
    std::string canonical;
    std::vector<std::string> aliases;
};

/// Tunables for the offline assessor. All text matching is case-insensitive.
struct RuleConfig {
    /// attack-class tag -> phrases that, found in a technique's name or tactics, imply the tag.
    std::map<std::string, std::vector<std::string>> class_keywords;
    std::vector<ProtocolAlias> protocols;
    /// Classes visible in flow records (rates, volumes, connection patterns).
    std::vector<std::string> flow_visible_classes;
    /// Classes whose detection needs payload / command level features.
    std::vector<std::string> protocol_manipulation_classes;
    long long adequate_scenarios = 5;
    LabelThresholds thresholds;

    static RuleConfig defaults();
    static RuleConfig from_json(const json& j);
    json to_json() const;
};

inline constexpr const char* kRuleAssessorId = "rules-v1";

/// Attack-class tags the technique maps to under `config`.
std::vector<std::string> technique_attack_classes(const stix::TechniqueRecord& t, const RuleConfig& config);
/// Canonical protocol names mentioned by the technique's name, description or data sources.
std::vector<std::string> technique_protocols(const stix::TechniqueRecord& t, const RuleConfig& config);

/// Deterministic structured-matching assessment of one pair.
AssessmentRecord assess_rule_based(const stix::TechniqueRecord& technique, const kb::DatasetProfile& profile,
                                   const RuleConfig& config = RuleConfig::defaults());

/// Case-insensitive, bounded by non-alphanumeric characters on both sides.
bool contains_term(std::string_view text, std::string_view term);

}  // namespace auditor::coverage
