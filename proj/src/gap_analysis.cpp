#include "auditor/gap_analysis.hpp"

#include "auditor/errors.hpp"

#include <algorithm>
#include <numeric>

namespace auditor::gaps {

namespace {

using Coverage = std::vector<char>;

/// covered[d][t] != 0 when dataset d reaches the threshold on technique t.
std::vector<Coverage> covered_sets(const CoverageMatrix& m, Label threshold)
{
    std::vector<Coverage> out(m.datasets().size(), Coverage(m.techniques().size(), 0));
    for (std::size_t d = 0; d < m.datasets().size(); ++d) {
        for (std::size_t t = 0; t < m.techniques().size(); ++t) {
            out[d][t] = m.cell(t, d) >= threshold ? 1 : 0;
        }
    }
    return out;
}

std::vector<std::string> sorted_names(const CoverageMatrix& m, const std::vector<std::size_t>& idx)
{
    std::vector<std::string> names;
    for (auto i : idx) names.push_back(m.datasets()[i]);
    std::sort(names.begin(), names.end());
    return names;
}

CombinationResult make_result(const CoverageMatrix& m, const std::vector<Coverage>& covered,
                              const std::vector<std::size_t>& idx)
{
    CombinationResult r;
    r.subset = sorted_names(m, idx);
    for (std::size_t t = 0; t < m.techniques().size(); ++t) {
        const bool hit = std::any_of(idx.begin(), idx.end(), [&](std::size_t d) { return covered[d][t] != 0; });
        (hit ? r.covered_ids : r.uncovered_ids).push_back(m.techniques()[t]);
    }
    r.covered_count = r.covered_ids.size();
    r.coverage_fraction = m.techniques().empty()
                              ? 0.0
                              : static_cast<double>(r.covered_count) / static_cast<double>(m.techniques().size());
    return r;
}

std::size_t union_count(const std::vector<Coverage>& covered, const std::vector<std::size_t>& idx, std::size_t n)
{
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        for (auto d : idx) {
            if (covered[d][t]) {
                ++count;
                break;
            }
        }
    }
    return count;
}

/// Advances idx to the next k-combination of [0, n); false after the last one.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n)
{
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

void check_k(const CoverageMatrix& m, std::size_t k)
{
    if (k < 1 || k > m.datasets().size()) {
        throw UsageError("combination size " + std::to_string(k) + " outside [1, " +
                         std::to_string(m.datasets().size()) + "]");
    }
}

bool better(std::size_t count, const std::vector<std::string>& names, std::size_t best_count,
            const std::vector<std::string>& best_names)
{
    if (count != best_count) return count > best_count;
    return names < best_names;
}

std::map<Label, std::size_t> empty_histogram()
{
    std::map<Label, std::size_t> h;
    for (auto l : coverage::kAllLabels) h[l] = 0;
    return h;
}

}  // namespace

CoverageMatrix::CoverageMatrix(std::vector<std::string> techniques, std::vector<std::string> datasets)
    : techniques_(std::move(techniques)),
      datasets_(std::move(datasets)),
      cells_(techniques_.size() * datasets_.size(), Label::Unknown)
{
    auto check_unique = [](std::vector<std::string> v, const char* what) {
        std::sort(v.begin(), v.end());
        if (auto it = std::adjacent_find(v.begin(), v.end()); it != v.end()) {
            throw SchemaViolation(std::string("coverage matrix: duplicate ") + what + " '" + *it + "'");
        }
    };
    check_unique(techniques_, "technique");
    check_unique(datasets_, "dataset");
}

Label CoverageMatrix::cell(std::size_t technique, std::size_t dataset) const
{
    return cells_.at(technique * datasets_.size() + dataset);
}

Label CoverageMatrix::cell(const std::string& technique, const std::string& dataset) const
{
    return cell(technique_index(technique), dataset_index(dataset));
}

void CoverageMatrix::set(std::size_t technique, std::size_t dataset, Label label)
{
    cells_.at(technique * datasets_.size() + dataset) = label;
}

void CoverageMatrix::set(const std::string& technique, const std::string& dataset, Label label)
{
    set(technique_index(technique), dataset_index(dataset), label);
}

std::size_t CoverageMatrix::technique_index(const std::string& id) const
{
    auto it = std::find(techniques_.begin(), techniques_.end(), id);
    if (it == techniques_.end()) {
        throw SchemaViolation("coverage matrix has no technique '" + id + "'");
    }
    return static_cast<std::size_t>(it - techniques_.begin());
}

std::size_t CoverageMatrix::dataset_index(const std::string& name) const
{
    auto it = std::find(datasets_.begin(), datasets_.end(), name);
    if (it == datasets_.end()) {
        throw UnknownDataset(name);
    }
    return static_cast<std::size_t>(it - datasets_.begin());
}

CoverageMatrix CoverageMatrix::from_records(const std::vector<std::string>& techniques,
                                            const std::vector<std::string>& datasets,
                                            const std::vector<std::vector<coverage::AssessmentRecord>>& assessor_sets)
{
    CoverageMatrix m(techniques, datasets);
    std::map<std::string, std::size_t> trow;
    std::map<std::string, std::size_t> dcol;
    for (std::size_t i = 0; i < techniques.size(); ++i) trow[techniques[i]] = i;
    for (std::size_t i = 0; i < datasets.size(); ++i) dcol[datasets[i]] = i;

    std::vector<char> seen(m.cells_.size(), 0);
    for (const auto& set : assessor_sets) {
        for (const auto& r : set) {
            auto t = trow.find(r.attack_id);
            auto d = dcol.find(r.dataset_name);
            if (t == trow.end() || d == dcol.end()) {
                continue;
            }
            const std::size_t at = t->second * datasets.size() + d->second;
            m.cells_[at] = seen[at] ? coverage::reconcile(m.cells_[at], r.label) : r.label;
            seen[at] = 1;
        }
    }
    return m;
}

json CoverageMatrix::to_json() const
{
    json rows = json::array();
    for (std::size_t t = 0; t < techniques_.size(); ++t) {
        json row = json::array();
        for (std::size_t d = 0; d < datasets_.size(); ++d) {
            row.push_back(std::string(coverage::to_string(cell(t, d))));
        }
        rows.push_back(std::move(row));
    }
    return json{{"techniques", techniques_}, {"datasets", datasets_}, {"cells", rows}};
}

CoverageMatrix CoverageMatrix::from_json(const json& j)
{
    try {
        CoverageMatrix m(j.at("techniques").get<std::vector<std::string>>(),
                         j.at("datasets").get<std::vector<std::string>>());
        const auto& rows = j.at("cells");
        if (rows.size() != m.techniques_.size()) {
            throw SchemaViolation("coverage matrix: row count does not match techniques");
        }
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (rows[t].size() != m.datasets_.size()) {
                throw SchemaViolation("coverage matrix: row " + m.techniques_[t] + " has the wrong width");
            }
            for (std::size_t d = 0; d < rows[t].size(); ++d) {
                m.set(t, d, coverage::label_from_string(rows[t][d].get<std::string>()));
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("coverage matrix: ") + e.what());
    }
}

std::vector<DatasetStats> dataset_stats(const CoverageMatrix& matrix)
{
    if (matrix.empty()) {
        throw EmptyMatrix("no techniques or no datasets");
    }
    const std::size_t n = matrix.techniques().size();
    std::vector<DatasetStats> out;
    for (std::size_t d = 0; d < matrix.datasets().size(); ++d) {
        DatasetStats s;
        s.dataset = matrix.datasets()[d];
        s.label_histogram = empty_histogram();
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const Label l = matrix.cell(t, d);
            sum += coverage::numeric_value(l);
            ++s.label_histogram[l];
        }
        s.mean_score = sum / static_cast<double>(n);
        s.full_count = s.label_histogram[Label::Full];
        s.full_fraction = static_cast<double>(s.full_count) / static_cast<double>(n);
        out.push_back(std::move(s));
    }
    return out;
}

CombinationResult combination_coverage(const CoverageMatrix& matrix, const std::set<std::string>& subset,
                                       Label threshold)
{
    if (subset.empty()) {
        throw UsageError("combination subset is empty");
    }
    std::vector<std::size_t> idx;
    for (const auto& name : subset) {
        idx.push_back(matrix.dataset_index(name));
    }
    return make_result(matrix, covered_sets(matrix, threshold), idx);
}

CombinationResult greedy_combination(const CoverageMatrix& matrix, std::size_t k, Label threshold)
{
    check_k(matrix, k);
    const auto covered = covered_sets(matrix, threshold);
    const std::size_t n_t = matrix.techniques().size();
    std::vector<std::size_t> chosen;
    Coverage have(n_t, 0);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = matrix.datasets().size();
        std::size_t best_gain = 0;
        for (std::size_t d = 0; d < matrix.datasets().size(); ++d) {
            if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) {
                continue;
            }
            std::size_t gain = 0;
            for (std::size_t t = 0; t < n_t; ++t) {
                gain += (covered[d][t] && !have[t]) ? 1 : 0;
            }
            if (best == matrix.datasets().size() || gain > best_gain ||
                (gain == best_gain && matrix.datasets()[d] < matrix.datasets()[best])) {
                best = d;
                best_gain = gain;
            }
        }
        chosen.push_back(best);
        for (std::size_t t = 0; t < n_t; ++t) {
            have[t] = have[t] || covered[best][t];
        }
    }
    auto r = make_result(matrix, covered, chosen);
    r.heuristic = true;
    return r;
}

CombinationResult best_combination(const CoverageMatrix& matrix, std::size_t k, Label threshold)
{
    check_k(matrix, k);
    const std::size_t n = matrix.datasets().size();
    if (n > kExhaustiveLimit) {
        return greedy_combination(matrix, k, threshold);
    }
    const auto covered = covered_sets(matrix, threshold);
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::size_t> best_idx = idx;
    std::size_t best_count = union_count(covered, idx, matrix.techniques().size());
    std::vector<std::string> best_names = sorted_names(matrix, idx);
    while (next_combination(idx, n)) {
        const std::size_t count = union_count(covered, idx, matrix.techniques().size());
        auto names = sorted_names(matrix, idx);
        if (better(count, names, best_count, best_names)) {
            best_idx = idx;
            best_count = count;
            best_names = std::move(names);
        }
    }
    return make_result(matrix, covered, best_idx);
}

std::vector<CombinationResult> ranked_combinations(const CoverageMatrix& matrix, std::size_t k, Label threshold)
{
    check_k(matrix, k);
    const std::size_t n = matrix.datasets().size();
    if (n > kExhaustiveLimit) {
        throw UsageError("ranked combinations need at most " + std::to_string(kExhaustiveLimit) + " datasets");
    }
    const auto covered = covered_sets(matrix, threshold);
    std::vector<CombinationResult> out;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    do {
        out.push_back(make_result(matrix, covered, idx));
    } while (next_combination(idx, n));
    std::sort(out.begin(), out.end(), [](const CombinationResult& a, const CombinationResult& b) {
        return better(a.covered_count, a.subset, b.covered_count, b.subset);
    });
    return out;
}

TechniqueGaps technique_gaps(const CoverageMatrix& matrix)
{
    TechniqueGaps g;
    for (std::size_t t = 0; t < matrix.techniques().size(); ++t) {
        Label best = Label::No;
        std::size_t partial = 0;
        std::size_t full = 0;
        for (std::size_t d = 0; d < matrix.datasets().size(); ++d) {
            const Label l = matrix.cell(t, d);
            best = std::max(best, l);
            partial += l == Label::Partial ? 1 : 0;
            full += l == Label::Full ? 1 : 0;
        }
        if (best <= Label::Unknown) {
            g.uncovered_everywhere.push_back(matrix.techniques()[t]);
        }
        if (full == 0 && partial <= 1 && best > Label::Unknown) {
            g.minimal_coverage.push_back(matrix.techniques()[t]);
        }
    }
    return g;
}

AgreementMatrix agreement(const std::vector<coverage::AssessmentRecord>& a,
                          const std::vector<coverage::AssessmentRecord>& b)
{
    using Key = std::pair<std::string, std::string>;  // (dataset, technique)
    auto index = [](const std::vector<coverage::AssessmentRecord>& records, const char* side) {
        std::map<Key, Label> m;
        for (const auto& r : records) {
            if (!m.emplace(Key{r.dataset_name, r.attack_id}, r.label).second) {
                throw KeyMismatch(std::string("assessor ") + side + " has two records for " + r.attack_id + " / " +
                                  r.dataset_name);
            }
        }
        return m;
    };
    const auto ma = index(a, "a");
    const auto mb = index(b, "b");
    if (ma.size() != mb.size()) {
        throw KeyMismatch("record sets cover " + std::to_string(ma.size()) + " and " + std::to_string(mb.size()) +
                          " pairs");
    }

    AgreementMatrix out;
    out.assessor_a = a.empty() ? std::string{} : a.front().assessor_id;
    out.assessor_b = b.empty() ? std::string{} : b.front().assessor_id;
    std::map<std::string, std::size_t> same;
    std::size_t same_total = 0;
    for (const auto& [key, label] : ma) {
        auto it = mb.find(key);
        if (it == mb.end()) {
            throw KeyMismatch(key.second + " / " + key.first + " assessed by only one side");
        }
        ++out.pairs_per_dataset[key.first];
        same[key.first];
        if (it->second == label) {
            ++same[key.first];
            ++same_total;
        }
    }
    for (const auto& [dataset, n] : out.pairs_per_dataset) {
        out.per_dataset[dataset] = static_cast<double>(same[dataset]) / static_cast<double>(n);
    }
    out.pairs = ma.size();
    out.overall_rate = out.pairs == 0 ? 0.0 : static_cast<double>(same_total) / static_cast<double>(out.pairs);
    return out;
}

std::vector<std::vector<double>> dataset_overlap(const CoverageMatrix& matrix, Label threshold)
{
    const auto covered = covered_sets(matrix, threshold);
    const std::size_t n_d = matrix.datasets().size();
    const std::size_t n_t = matrix.techniques().size();
    std::vector<std::vector<double>> out(n_d, std::vector<double>(n_d, 0.0));
    if (n_t == 0) {
        return out;
    }
    for (std::size_t i = 0; i < n_d; ++i) {
        for (std::size_t j = 0; j < n_d; ++j) {
            std::size_t both = 0;
            for (std::size_t t = 0; t < n_t; ++t) {
                both += (covered[i][t] && covered[j][t]) ? 1 : 0;
            }
            out[i][j] = static_cast<double>(both) / static_cast<double>(n_t);
        }
    }
    return out;
}

json to_json(const DatasetStats& s)
{
    json hist = json::object();
    for (const auto& [l, n] : s.label_histogram) {
        hist[std::string(coverage::to_string(l))] = n;
    }
    return json{{"dataset", s.dataset},
                {"mean_score", s.mean_score},
                {"full_count", s.full_count},
                {"full_fraction", s.full_fraction},
                {"label_histogram", hist}};
}

DatasetStats dataset_stats_from_json(const json& j)
{
    DatasetStats s;
    s.dataset = j.at("dataset").get<std::string>();
    s.mean_score = j.at("mean_score").get<double>();
    s.full_count = j.at("full_count").get<std::size_t>();
    s.full_fraction = j.at("full_fraction").get<double>();
    for (const auto& [k, v] : j.at("label_histogram").items()) {
        s.label_histogram[coverage::label_from_string(k)] = v.get<std::size_t>();
    }
    return s;
}

json to_json(const CombinationResult& c)
{
    return json{{"subset", c.subset},
                {"covered_count", c.covered_count},
                {"coverage_fraction", c.coverage_fraction},
                {"covered_ids", c.covered_ids},
                {"uncovered_ids", c.uncovered_ids},
                {"heuristic", c.heuristic}};
}

CombinationResult combination_from_json(const json& j)
{
    CombinationResult c;
    c.subset = j.at("subset").get<std::vector<std::string>>();
    c.covered_count = j.at("covered_count").get<std::size_t>();
    c.coverage_fraction = j.at("coverage_fraction").get<double>();
    c.covered_ids = j.at("covered_ids").get<std::vector<std::string>>();
    c.uncovered_ids = j.at("uncovered_ids").get<std::vector<std::string>>();
    c.heuristic = j.at("heuristic").get<bool>();
    return c;
}

json to_json(const TechniqueGaps& g)
{
    return json{{"uncovered_everywhere", g.uncovered_everywhere}, {"minimal_coverage", g.minimal_coverage}};
}

TechniqueGaps gaps_from_json(const json& j)
{
    return TechniqueGaps{j.at("uncovered_everywhere").get<std::vector<std::string>>(),
                         j.at("minimal_coverage").get<std::vector<std::string>>()};
}

json to_json(const AgreementMatrix& a)
{
    return json{{"assessor_a", a.assessor_a},
                {"assessor_b", a.assessor_b},
                {"per_dataset", a.per_dataset},
                {"pairs_per_dataset", a.pairs_per_dataset},
                {"overall_rate", a.overall_rate},
                {"pairs", a.pairs}};
}

AgreementMatrix agreement_from_json(const json& j)
{
    AgreementMatrix a;
    a.assessor_a = j.at("assessor_a").get<std::string>();
    a.assessor_b = j.at("assessor_b").get<std::string>();
    a.per_dataset = j.at("per_dataset").get<std::map<std::string, double>>();
    a.pairs_per_dataset = j.at("pairs_per_dataset").get<std::map<std::string, std::size_t>>();
    a.overall_rate = j.at("overall_rate").get<double>();
    a.pairs = j.at("pairs").get<std::size_t>();
    return a;
}

}  // namespace auditor::gaps
