#include "auditor/risk.hpp"

#include "auditor/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace auditor::risk {

namespace {

void check_range(const std::string& key, double v)
{
    if (!(v >= BaseRiskTable::kMin && v <= BaseRiskTable::kMax)) {
        throw SchemaViolation(fmt::format("base risk for {} is {} (must be within [1, 10])", key, v));
    }
}

}  // namespace

BaseRiskTable::BaseRiskTable(double default_value, std::map<std::string, double> values)
    : default_value_(default_value), values_(std::move(values))
{
    check_range("_default", default_value_);
    for (const auto& [id, v] : values_) {
        if (!stix::is_technique_id(id)) {
            throw SchemaViolation("base risk table key '" + id + "' is not a technique id");
        }
        check_range(id, v);
    }
}

double BaseRiskTable::lookup(const std::string& attack_id) const
{
    auto it = values_.find(attack_id);
    return it == values_.end() ? default_value_ : it->second;
}

BaseRiskTable BaseRiskTable::from_json(const json& j)
{
    if (!j.is_object()) {
        throw SchemaViolation("base risk table must be a JSON object");
    }
    double def = 5.0;
    std::map<std::string, double> values;
    for (const auto& [key, v] : j.items()) {
        if (!v.is_number()) {
            throw SchemaViolation("base risk for " + key + " is not a number");
        }
        if (key == "_default") {
            def = v.get<double>();
        } else {
            values.emplace(key, v.get<double>());
        }
    }
    return BaseRiskTable(def, std::move(values));
}

json BaseRiskTable::to_json() const
{
    json j = values_;
    j["_default"] = default_value_;
    return j;
}

double frequency_score(std::uint64_t occurrence_count)
{
    return std::log2(static_cast<double>(occurrence_count) + 1.0);
}

std::vector<std::string> combiner_names()
{
    return {"multiplicative", "additive"};
}

std::string combiner_formula(const std::string& combiner)
{
    if (combiner == "multiplicative") return "base_risk * (0.5 + 0.1 * frequency_score)";
    if (combiner == "additive") return "base_risk + frequency_score";
    throw UnknownCombiner(combiner);
}

double weighted_risk(double base_risk, double frequency, const std::string& combiner)
{
    if (combiner == "multiplicative") {
        return base_risk * (0.5 + 0.1 * frequency);
    }
    if (combiner == "additive") {
        return base_risk + frequency;
    }
    throw UnknownCombiner(combiner);
}

std::vector<RiskProfile> rank_techniques(const threat::OccurrenceMap& occurrences, const BaseRiskTable& table,
                                         const std::string& combiner)
{
    std::vector<RiskProfile> out;
    out.reserve(occurrences.size());
    for (const auto& [id, users] : occurrences.users) {
        RiskProfile p;
        p.attack_id = id;
        p.occurrence_count = users.size();
        p.frequency_score = frequency_score(users.size());
        p.base_risk = table.lookup(id);
        p.weighted_risk = weighted_risk(p.base_risk, p.frequency_score, combiner);
        p.combiner = combiner;
        out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const RiskProfile& a, const RiskProfile& b) {
        if (a.weighted_risk != b.weighted_risk) {
            return a.weighted_risk > b.weighted_risk;
        }
        return a.attack_id < b.attack_id;
    });
    return out;
}

json to_json(const RiskProfile& p)
{
    return json{{"attack_id", p.attack_id},         {"occurrence_count", p.occurrence_count},
                {"frequency_score", p.frequency_score}, {"base_risk", p.base_risk},
                {"weighted_risk", p.weighted_risk}, {"combiner", p.combiner}};
}

RiskProfile risk_profile_from_json(const json& j)
{
    try {
        RiskProfile p;
        p.attack_id = j.at("attack_id").get<std::string>();
        p.occurrence_count = j.at("occurrence_count").get<std::size_t>();
        p.frequency_score = j.at("frequency_score").get<double>();
        p.base_risk = j.at("base_risk").get<double>();
        p.weighted_risk = j.at("weighted_risk").get<double>();
        p.combiner = j.at("combiner").get<std::string>();
        return p;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("risk profile: ") + e.what());
    }
}

}  // namespace auditor::risk
