#include "auditor/coverage.hpp"

#include "auditor/errors.hpp"
#include "auditor/hashing.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace auditor::coverage {

namespace {

constexpr double kScoreEps = 1e-9;

std::string lowered(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_word_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string join(const std::vector<std::string>& v, std::string_view sep = ", ")
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

bool intersects_ci(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    for (const auto& x : a) {
        for (const auto& y : b) {
            if (lowered(x) == lowered(y)) {
                return true;
            }
        }
    }
    return false;
}

std::vector<std::string> intersection_ci(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    std::vector<std::string> out;
    for (const auto& x : a) {
        for (const auto& y : b) {
            if (lowered(x) == lowered(y)) {
                out.push_back(x);
                break;
            }
        }
    }
    return out;
}

/// Canonical protocol name for a free-form protocol label from a dataset profile.
std::string canonical_protocol(const std::string& label, const RuleConfig& config)
{
    for (const auto& p : config.protocols) {
        if (contains_term(label, p.canonical)) {
            return p.canonical;
        }
        for (const auto& alias : p.aliases) {
            if (contains_term(label, alias)) {
                return p.canonical;
            }
        }
    }
    return label;
}

}  // namespace

std::string_view to_string(Answer a)
{
    switch (a) {
        case Answer::Yes: return "Yes";
        case Answer::No: return "No";
        case Answer::Unknown: return "Unknown";
    }
    return "Unknown";
}

Answer answer_from_string(std::string_view s)
{
    const std::string l = lowered(s);
    if (l == "yes") return Answer::Yes;
    if (l == "no") return Answer::No;
    if (l == "unknown") return Answer::Unknown;
    throw SchemaViolation("unknown answer '" + std::string(s) + "'");
}

std::string_view to_string(Criterion c)
{
    switch (c) {
        case Criterion::AttackTypePresent: return "attack_type_present";
        case Criterion::ProtocolRecorded: return "protocol_recorded";
        case Criterion::DomainMatch: return "domain_match";
        case Criterion::FeatureSufficiency: return "feature_sufficiency";
        case Criterion::ExampleAdequacy: return "example_adequacy";
    }
    return "attack_type_present";
}

std::size_t CriteriaVector::count(Answer a) const
{
    return static_cast<std::size_t>(std::count(answers.begin(), answers.end(), a));
}

std::string_view to_string(Label l)
{
    switch (l) {
        case Label::No: return "No";
        case Label::Unknown: return "Unknown";
        case Label::Partial: return "Partial";
        case Label::Full: return "Full";
    }
    return "Unknown";
}

Label label_from_string(std::string_view s)
{
    if (s == "Full") return Label::Full;
    if (s == "Partial") return Label::Partial;
    if (s == "No") return Label::No;
    if (s == "Unknown") return Label::Unknown;
    throw SchemaViolation("unknown coverage label '" + std::string(s) + "'");
}

double numeric_value(Label l)
{
    switch (l) {
        case Label::Full: return 1.0;
        case Label::Partial: return 0.5;
        case Label::No: return 0.0;
        case Label::Unknown: return 0.25;
    }
    return 0.25;
}

double score_criteria(const CriteriaVector& criteria)
{
    // yes/5 is the correctly rounded multiple of 0.2; 0.2*yes is not (0.2*3 != 0.6).
    return static_cast<double>(criteria.count(Answer::Yes)) / 5.0;
}

LabelThresholds LabelThresholds::from_json(const json& j)
{
    LabelThresholds t;
    try {
        t.full_min = j.value("full_min", t.full_min);
        t.partial_min = j.value("partial_min", t.partial_min);
        t.unknown_max_score = j.value("unknown_max_score", t.unknown_max_score);
        t.unknown_min_count = j.value("unknown_min_count", t.unknown_min_count);
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("label thresholds: ") + e.what());
    }
    if (!(0.0 <= t.partial_min && t.partial_min <= t.full_min && t.full_min <= 1.0) || t.unknown_max_score < 0.0 ||
        t.unknown_min_count < 0 || t.unknown_min_count > static_cast<int>(kCriteriaCount)) {
        throw SchemaViolation("label thresholds out of range");
    }
    return t;
}

json LabelThresholds::to_json() const
{
    return json{{"full_min", full_min},
                {"partial_min", partial_min},
                {"unknown_max_score", unknown_max_score},
                {"unknown_min_count", unknown_min_count}};
}

Label label_from_score(double score, int unknown_count, const LabelThresholds& thresholds)
{
    const double steps = std::round(score * 5.0);
    if (!std::isfinite(score) || steps < 0.0 || steps > 5.0 || std::abs(score - steps / 5.0) > kScoreEps) {
        throw InvalidScore(fmt::format("{} is not a multiple of 0.2 in [0, 1]", score));
    }
    if (unknown_count < 0 || unknown_count > static_cast<int>(kCriteriaCount)) {
        throw InvalidScore(fmt::format("unknown_count {} outside [0, 5]", unknown_count));
    }
    if (score >= thresholds.full_min - kScoreEps) {
        return Label::Full;
    }
    if (score >= thresholds.partial_min - kScoreEps) {
        return Label::Partial;
    }
    if (score <= thresholds.unknown_max_score + kScoreEps && unknown_count >= thresholds.unknown_min_count) {
        return Label::Unknown;
    }
    return Label::No;
}

Label reconcile(Label a, Label b)
{
    return std::min(a, b);
}

std::string_view to_string(RecordStatus s)
{
    switch (s) {
        case RecordStatus::Assessed: return "assessed";
        case RecordStatus::Malformed: return "malformed";
        case RecordStatus::Unassessed: return "unassessed";
    }
    return "assessed";
}

namespace {

RecordStatus status_from_string(std::string_view s)
{
    if (s == "assessed") return RecordStatus::Assessed;
    if (s == "malformed") return RecordStatus::Malformed;
    if (s == "unassessed") return RecordStatus::Unassessed;
    throw SchemaViolation("unknown record status '" + std::string(s) + "'");
}

}  // namespace

json to_json(const AssessmentRecord& r)
{
    json criteria = json::object();
    for (std::size_t i = 0; i < kCriteriaCount; ++i) {
        criteria[std::string(to_string(static_cast<Criterion>(i)))] = std::string(to_string(r.criteria.answers[i]));
    }
    return json{{"attack_id", r.attack_id},
                {"dataset_name", r.dataset_name},
                {"assessor_id", r.assessor_id},
                {"criteria", criteria},
                {"score", r.score},
                {"label", std::string(to_string(r.label))},
                {"numeric_value", numeric_value(r.label)},
                {"rationale", r.rationale},
                {"cache_key", r.cache_key},
                {"status", std::string(to_string(r.status))}};
}

AssessmentRecord record_from_json(const json& j)
{
    try {
        AssessmentRecord r;
        r.attack_id = j.at("attack_id").get<std::string>();
        r.dataset_name = j.at("dataset_name").get<std::string>();
        r.assessor_id = j.at("assessor_id").get<std::string>();
        const auto& c = j.at("criteria");
        for (std::size_t i = 0; i < kCriteriaCount; ++i) {
            r.criteria.answers[i] =
                answer_from_string(c.at(std::string(to_string(static_cast<Criterion>(i)))).get<std::string>());
        }
        r.score = j.at("score").get<double>();
        r.label = label_from_string(j.at("label").get<std::string>());
        r.rationale = j.value("rationale", "");
        r.cache_key = j.value("cache_key", "");
        r.status = status_from_string(j.value("status", "assessed"));
        return r;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("assessment record: ") + e.what());
    }
}

void finalize(AssessmentRecord& r, const LabelThresholds& thresholds)
{
    r.score = score_criteria(r.criteria);
    r.label = label_from_score(r.score, static_cast<int>(r.criteria.count(Answer::Unknown)), thresholds);
}

bool contains_term(std::string_view text, std::string_view term)
{
    if (term.empty()) {
        return false;
    }
    const std::string hay = lowered(text);
    const std::string needle = lowered(term);
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
        const std::size_t end = pos + needle.size();
        const bool right_ok = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
        if (left_ok && right_ok) {
            return true;
        }
    }
    return false;
}

RuleConfig RuleConfig::defaults()
{
    RuleConfig c;
    c.class_keywords = {
        {"brute-force", {"brute force", "password guessing", "password spraying", "password cracking",
                         "credential stuffing", "default credentials"}},
        {"DoS/DDoS", {"denial of service", "denial of control", "flood", "loss of availability"}},
        {"botnet", {"command-and-control", "application layer protocol", "non-standard port", "botnet",
                    "remote access software", "web service"}},
        {"web", {"exploit public-facing application", "web", "drive-by", "server software component"}},
        {"infiltration", {"initial-access", "phishing", "spearphishing", "external remote services",
                          "ingress tool transfer", "exploitation for client execution", "internet accessible device"}},
        {"lateral-movement", {"lateral-movement", "remote services", "lateral tool transfer",
                              "exploitation of remote services"}},
        {"cyber-physical", {"impair-process-control", "inhibit-response-function", "manipulation of control",
                            "manipulation of view", "loss of control", "loss of view", "loss of safety",
                            "loss of protection", "damage to property", "modify parameter"}},
        {"protocol-manipulation", {"impair-process-control", "unauthorized command message", "spoof reporting message",
                                   "block command message", "block reporting message", "modify parameter",
                                   "program download", "modify program", "adversary-in-the-middle",
                                   "commonly used port", "standard application layer protocol", "brute force i/o"}},
        {"multi-stage", {"initial-access", "execution", "discovery", "lateral-movement", "collection",
                         "command-and-control", "impair-process-control", "inhibit-response-function"}},
    };
    c.protocols = {
        {"Modbus/TCP", {"modbus", "modbus tcp"}},
        {"IEC 60870-5-104", {"60870-5-104", "iec-104", "iec 104", "iec104"}},
        {"IEC 60870-5-101", {"60870-5-101", "iec-101", "iec 101"}},
        {"IEC 61850", {"61850", "goose"}},
        {"DNP3", {"dnp3", "dnp 3"}},
        {"EtherNet/IP (CIP)", {"ethernet/ip", "enip", "common industrial protocol"}},
        {"OPC UA", {"opc ua", "opc-ua", "opc"}},
        {"PROFINET", {"profinet"}},
        {"S7comm", {"s7comm", "s7 protocol"}},
        {"SMB", {"smb", "server message block", "windows admin shares"}},
        {"RDP", {"rdp", "remote desktop protocol"}},
        {"HTTPS", {"https"}},
        {"HTTP", {"http"}},
        {"TLS", {"tls", "ssl"}},
        {"SSH", {"ssh"}},
        {"FTP", {"ftp", "sftp"}},
        {"DNS", {"dns"}},
        {"SMTP", {"smtp"}},
        {"SNMP", {"snmp"}},
        {"Telnet", {"telnet"}},
        {"VNC", {"vnc"}},
        {"WinRM", {"winrm", "windows remote management"}},
        {"DCOM", {"dcom"}},
        {"LDAP", {"ldap"}},
        {"Kerberos", {"kerberos"}},
        {"ICMP", {"icmp"}},
    };
    c.flow_visible_classes = {"DoS/DDoS", "brute-force", "botnet"};
    c.protocol_manipulation_classes = {"protocol-manipulation"};
    return c;
}

RuleConfig RuleConfig::from_json(const json& j)
{
    RuleConfig c = defaults();
    try {
        if (j.contains("class_keywords")) {
            c.class_keywords = j.at("class_keywords").get<std::map<std::string, std::vector<std::string>>>();
        }
        if (j.contains("protocols")) {
            c.protocols.clear();
            for (const auto& p : j.at("protocols")) {
                c.protocols.push_back(
                    {p.at("canonical").get<std::string>(), p.value("aliases", std::vector<std::string>{})});
            }
        }
        if (j.contains("flow_visible_classes")) {
            c.flow_visible_classes = j.at("flow_visible_classes").get<std::vector<std::string>>();
        }
        if (j.contains("protocol_manipulation_classes")) {
            c.protocol_manipulation_classes = j.at("protocol_manipulation_classes").get<std::vector<std::string>>();
        }
        c.adequate_scenarios = j.value("adequate_scenarios", c.adequate_scenarios);
        if (j.contains("thresholds")) {
            c.thresholds = LabelThresholds::from_json(j.at("thresholds"));
        }
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("rule assessor config: ") + e.what());
    }
    return c;
}

json RuleConfig::to_json() const
{
    // Array, not object: first matching entry wins during canonicalisation.
    json protocols = json::array();
    for (const auto& p : this->protocols) {
        protocols.push_back({{"canonical", p.canonical}, {"aliases", p.aliases}});
    }
    return json{{"class_keywords", class_keywords},
                {"protocols", protocols},
                {"flow_visible_classes", flow_visible_classes},
                {"protocol_manipulation_classes", protocol_manipulation_classes},
                {"adequate_scenarios", adequate_scenarios},
                {"thresholds", thresholds.to_json()}};
}

std::vector<std::string> technique_attack_classes(const stix::TechniqueRecord& t, const RuleConfig& config)
{
    std::vector<std::string> out;
    for (const auto& [tag, phrases] : config.class_keywords) {
        const bool hit = std::any_of(phrases.begin(), phrases.end(), [&](const std::string& phrase) {
            if (contains_term(t.name, phrase)) {
                return true;
            }
            return std::any_of(t.tactics.begin(), t.tactics.end(),
                               [&](const std::string& tactic) { return lowered(tactic) == lowered(phrase); });
        });
        if (hit) {
            out.push_back(tag);
        }
    }
    return out;
}

std::vector<std::string> technique_protocols(const stix::TechniqueRecord& t, const RuleConfig& config)
{
    std::vector<std::string> texts{t.name, t.description};
    texts.insert(texts.end(), t.data_sources.begin(), t.data_sources.end());
    std::vector<std::string> out;
    for (const auto& p : config.protocols) {
        bool hit = false;
        for (const auto& text : texts) {
            if (contains_term(text, p.canonical) ||
                std::any_of(p.aliases.begin(), p.aliases.end(),
                            [&](const std::string& a) { return contains_term(text, a); })) {
                hit = true;
                break;
            }
        }
        if (hit) {
            out.push_back(p.canonical);
        }
    }
    return out;
}

AssessmentRecord assess_rule_based(const stix::TechniqueRecord& technique, const kb::DatasetProfile& profile,
                                   const RuleConfig& config)
{
    AssessmentRecord r;
    r.attack_id = technique.attack_id;
    r.dataset_name = profile.name;
    r.assessor_id = kRuleAssessorId;

    std::vector<std::string> notes;
    const auto tags = technique_attack_classes(technique, config);

    // (1) comparable attack type in the dataset
    const auto shared = intersection_ci(tags, profile.attack_classes);
    r.criteria[Criterion::AttackTypePresent] = shared.empty() ? Answer::No : Answer::Yes;
    notes.push_back(shared.empty() ? fmt::format("attack_type_present=No: technique classes [{}] not in dataset",
                                                 join(tags))
                                   : fmt::format("attack_type_present=Yes: shared classes [{}]", join(shared)));

    // (2) protocol the technique relies on is recorded
    const auto needed = technique_protocols(technique, config);
    if (needed.empty()) {
        r.criteria[Criterion::ProtocolRecorded] = Answer::Unknown;
        notes.push_back("protocol_recorded=Unknown: technique names no protocol");
    } else {
        std::vector<std::string> recorded;
        for (const auto& p : profile.industrial_protocols) recorded.push_back(canonical_protocol(p, config));
        for (const auto& p : profile.enterprise_protocols) recorded.push_back(canonical_protocol(p, config));
        const auto hit = intersection_ci(needed, recorded);
        r.criteria[Criterion::ProtocolRecorded] = hit.empty() ? Answer::No : Answer::Yes;
        notes.push_back(hit.empty() ? fmt::format("protocol_recorded=No: needs [{}]", join(needed))
                                    : fmt::format("protocol_recorded=Yes: [{}]", join(hit)));
    }

    // (3) operational domain
    bool domain_ok = false;
    switch (profile.domain) {
        case kb::Domain::Hybrid: domain_ok = true; break;
        case kb::Domain::EnterpriseIT: domain_ok = technique.matrices.count(stix::Matrix::Enterprise) > 0; break;
        case kb::Domain::IndustrialOT: domain_ok = technique.matrices.count(stix::Matrix::ICS) > 0; break;
    }
    r.criteria[Criterion::DomainMatch] = domain_ok ? Answer::Yes : Answer::No;
    notes.push_back(fmt::format("domain_match={}: dataset domain {}", domain_ok ? "Yes" : "No",
                                kb::to_string(profile.domain)));

    // (4) feature granularity
    const bool flow_visible = intersects_ci(tags, config.flow_visible_classes);
    const bool physical = intersects_ci(tags, {"cyber-physical"});
    bool features_ok = false;
    switch (profile.feature_granularity) {
        case kb::Granularity::PacketLevel:
        case kb::Granularity::Mixed: features_ok = true; break;
        case kb::Granularity::FlowLevel: features_ok = flow_visible; break;
        case kb::Granularity::ProcessTelemetry: features_ok = physical; break;
    }
    r.criteria[Criterion::FeatureSufficiency] = features_ok ? Answer::Yes : Answer::No;
    notes.push_back(fmt::format("feature_sufficiency={}: {} features", features_ok ? "Yes" : "No",
                                kb::to_string(profile.feature_granularity)));

    // (5) more than token examples
    Answer examples = Answer::No;
    if (profile.scenario_count >= config.adequate_scenarios) {
        examples = Answer::Yes;
    } else if (profile.scenario_count > 0) {
        examples = Answer::Unknown;
    }
    r.criteria[Criterion::ExampleAdequacy] = examples;
    notes.push_back(fmt::format("example_adequacy={}: {} scenarios", to_string(examples), profile.scenario_count));

    finalize(r, config.thresholds);
    r.rationale = join(notes, "; ");
    r.cache_key = sha256_hex(fmt::format("{}\n{}\n{}\n{}\n{}", kRuleAssessorId, technique.attack_id,
                                         stix::to_json(technique).dump(), kb::profile_hash(profile),
                                         config.to_json().dump()));
    return r;
}

}  // namespace auditor::coverage
