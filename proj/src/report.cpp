#include "auditor/report.hpp"

#include "auditor/errors.hpp"
#include "auditor/svg.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>

namespace auditor::report {

namespace {

using coverage::Label;

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string pct(double fraction)
{
    return fmt::format("{:.1f}%", fraction * 100.0);
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

std::string md_cell(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

std::optional<double> pearson(const std::vector<RiskCoveragePoint>& pts)
{
    const double n = static_cast<double>(pts.size());
    if (pts.size() < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.weighted_risk;
        my += p.mean_coverage;
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& p : pts) {
        sxy += (p.weighted_risk - mx) * (p.mean_coverage - my);
        sxx += (p.weighted_risk - mx) * (p.weighted_risk - mx);
        syy += (p.mean_coverage - my) * (p.mean_coverage - my);
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Analytics compute_analytics(const gaps::CoverageMatrix& matrix,
                            const std::vector<std::vector<coverage::AssessmentRecord>>& assessor_records,
                            const std::vector<risk::RiskProfile>& risk, Label threshold)
{
    Analytics a;
    a.technique_count = matrix.techniques().size();
    a.combination_threshold = threshold;
    a.stats = gaps::dataset_stats(matrix);
    for (std::size_t k = 1; k <= matrix.datasets().size(); ++k) {
        a.best_by_size.push_back(gaps::best_combination(matrix, k, threshold));
    }
    if (matrix.datasets().size() >= 2 && matrix.datasets().size() <= gaps::kExhaustiveLimit) {
        a.pair_ranking = gaps::ranked_combinations(matrix, 2, threshold);
    }
    a.technique_gaps = gaps::technique_gaps(matrix);
    if (assessor_records.size() >= 2) {
        a.agreement = gaps::agreement(assessor_records[0], assessor_records[1]);
    }
    a.dataset_overlap = gaps::dataset_overlap(matrix, threshold);

    std::map<std::string, double> risk_by_id;
    for (const auto& p : risk) risk_by_id[p.attack_id] = p.weighted_risk;
    for (std::size_t t = 0; t < matrix.techniques().size(); ++t) {
        auto it = risk_by_id.find(matrix.techniques()[t]);
        if (it == risk_by_id.end()) continue;
        double sum = 0;
        for (std::size_t d = 0; d < matrix.datasets().size(); ++d) sum += coverage::numeric_value(matrix.cell(t, d));
        a.risk_coverage.push_back({it->first, it->second, sum / static_cast<double>(matrix.datasets().size())});
    }
    a.risk_coverage_correlation = pearson(a.risk_coverage);
    return a;
}

json to_json(const Analytics& a)
{
    json stats = json::array();
    for (const auto& s : a.stats) stats.push_back(gaps::to_json(s));
    json best = json::array();
    for (const auto& c : a.best_by_size) best.push_back(gaps::to_json(c));
    json pairs = json::array();
    for (const auto& c : a.pair_ranking) pairs.push_back(gaps::to_json(c));
    json rc = json::array();
    for (const auto& p : a.risk_coverage) {
        rc.push_back({{"attack_id", p.attack_id}, {"weighted_risk", p.weighted_risk}, {"mean_coverage", p.mean_coverage}});
    }
    return json{{"technique_count", a.technique_count},
                {"combination_threshold", std::string(coverage::to_string(a.combination_threshold))},
                {"dataset_stats", stats},
                {"best_combinations", best},
                {"pair_ranking", pairs},
                {"technique_gaps", gaps::to_json(a.technique_gaps)},
                {"agreement", a.agreement ? gaps::to_json(*a.agreement) : json(nullptr)},
                {"dataset_overlap", a.dataset_overlap},
                {"risk_coverage", rc},
                {"risk_coverage_correlation",
                 a.risk_coverage_correlation ? json(*a.risk_coverage_correlation) : json(nullptr)}};
}

Analytics analytics_from_json(const json& j)
{
    try {
        Analytics a;
        a.technique_count = j.at("technique_count").get<std::size_t>();
        a.combination_threshold = coverage::label_from_string(j.at("combination_threshold").get<std::string>());
        for (const auto& s : j.at("dataset_stats")) a.stats.push_back(gaps::dataset_stats_from_json(s));
        for (const auto& c : j.at("best_combinations")) a.best_by_size.push_back(gaps::combination_from_json(c));
        for (const auto& c : j.at("pair_ranking")) a.pair_ranking.push_back(gaps::combination_from_json(c));
        a.technique_gaps = gaps::gaps_from_json(j.at("technique_gaps"));
        if (!j.at("agreement").is_null()) a.agreement = gaps::agreement_from_json(j.at("agreement"));
        a.dataset_overlap = j.at("dataset_overlap").get<std::vector<std::vector<double>>>();
        for (const auto& p : j.at("risk_coverage")) {
            a.risk_coverage.push_back({p.at("attack_id").get<std::string>(), p.at("weighted_risk").get<double>(),
                                       p.at("mean_coverage").get<double>()});
        }
        if (!j.at("risk_coverage_correlation").is_null()) {
            a.risk_coverage_correlation = j.at("risk_coverage_correlation").get<double>();
        }
        return a;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("analytics: ") + e.what());
    }
}

std::string coverage_matrix_csv(const gaps::CoverageMatrix& matrix)
{
    std::string out = "attack_id";
    for (const auto& d : matrix.datasets()) out += "," + csv_field(d);
    out += "\n";
    for (std::size_t t = 0; t < matrix.techniques().size(); ++t) {
        out += csv_field(matrix.techniques()[t]);
        for (std::size_t d = 0; d < matrix.datasets().size(); ++d) {
            out += ",";
            out += coverage::to_string(matrix.cell(t, d));
        }
        out += "\n";
    }
    return out;
}

std::string agreement_csv(const gaps::CoverageMatrix& matrix, const Analytics& a)
{
    const auto& ds = matrix.datasets();
    std::string out = "dataset";
    for (const auto& d : ds) out += "," + csv_field(d);
    out += "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out += csv_field(ds[i]);
        for (std::size_t j = 0; j < ds.size(); ++j) {
            out += ",";
            if (i == j) {
                if (a.agreement && a.agreement->per_dataset.count(ds[i])) {
                    out += fmt::format("{}", a.agreement->per_dataset.at(ds[i]));
                }
            } else {
                out += fmt::format("{}", a.dataset_overlap.at(i).at(j));
            }
        }
        out += "\n";
    }
    return out;
}

std::string markdown(const Analytics& a, const json& metadata)
{
    std::string md = "# NIDS dataset coverage report\n\n";

    md += "## Run metadata\n\n";
    md += fmt::format("- config hash: `{}`\n", metadata.value("config_hash", ""));
    if (metadata.contains("bundles")) {
        for (const auto& b : metadata.at("bundles")) {
            md += fmt::format("- ATT&CK {} bundle: version `{}`, modified `{}`\n", b.value("matrix", ""),
                              b.value("attack_spec_version", ""), b.value("modified", ""));
        }
    }
    if (metadata.contains("assessors")) {
        md += fmt::format("- assessors: {}\n", join(metadata.at("assessors").get<std::vector<std::string>>()));
    }
    if (metadata.contains("prompt_template_hash")) {
        md += fmt::format("- prompt template: `{}`\n", metadata.at("prompt_template_hash").get<std::string>());
    }
    if (metadata.contains("risk_combiner")) {
        md += fmt::format("- weighted risk: `{}` = {} (toolkit convention)\n",
                          metadata.at("risk_combiner").value("name", ""),
                          metadata.at("risk_combiner").value("formula", ""));
    }
    md += fmt::format("- techniques analysed: {}\n", a.technique_count);
    md += fmt::format("- a technique counts as covered at label >= {}\n",
                      coverage::to_string(a.combination_threshold));
    if (metadata.contains("notes")) {
        for (const auto& n : metadata.at("notes")) md += "- " + n.get<std::string>() + "\n";
    }

    md += "\n## Per-dataset coverage\n\n";
    md += "| Dataset | Mean score | Full | Full % | Partial | Unknown | No |\n";
    md += "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& s : a.stats) {
        md += fmt::format("| {} | {:.3f} | {} | {} | {} | {} | {} |\n", md_cell(s.dataset), s.mean_score,
                          s.full_count, pct(s.full_fraction), s.label_histogram.at(Label::Partial),
                          s.label_histogram.at(Label::Unknown), s.label_histogram.at(Label::No));
    }

    md += "\n## Best dataset combinations\n\n";
    md += "| Size | Datasets | Covered | Coverage |\n|---:|---|---:|---:|\n";
    for (const auto& c : a.best_by_size) {
        md += fmt::format("| {} | {}{} | {} | {} |\n", c.subset.size(), md_cell(join(c.subset, " + ")),
                          c.heuristic ? " (greedy)" : "", c.covered_count, pct(c.coverage_fraction));
    }
    if (!a.pair_ranking.empty()) {
        md += "\n### All two-dataset combinations\n\n| Datasets | Coverage |\n|---|---:|\n";
        for (const auto& c : a.pair_ranking) {
            md += fmt::format("| {} | {} |\n", md_cell(join(c.subset, " + ")), pct(c.coverage_fraction));
        }
    }

    md += "\n## Coverage gaps\n\n";
    md += fmt::format("- uncovered in every dataset ({}): {}\n", a.technique_gaps.uncovered_everywhere.size(),
                      a.technique_gaps.uncovered_everywhere.empty() ? "none"
                                                                    : join(a.technique_gaps.uncovered_everywhere));
    md += fmt::format("- minimal coverage, at most one Partial ({}): {}\n", a.technique_gaps.minimal_coverage.size(),
                      a.technique_gaps.minimal_coverage.empty() ? "none" : join(a.technique_gaps.minimal_coverage));

    md += "\n## Assessor agreement\n\n";
    if (a.agreement) {
        md += fmt::format("{} vs {}\n\n| Dataset | Agreement |\n|---|---:|\n", a.agreement->assessor_a,
                          a.agreement->assessor_b);
        for (const auto& [d, rate] : a.agreement->per_dataset) {
            md += fmt::format("| {} | {} |\n", md_cell(d), pct(rate));
        }
        md += fmt::format("| **overall** | {} |\n", pct(a.agreement->overall_rate));
    } else {
        md += "Only one assessor ran; agreement not computed.\n";
    }

    if (a.risk_coverage_correlation) {
        md += fmt::format("\n## Risk vs coverage\n\nPearson correlation between weighted risk and mean coverage: {:.3f} "
                          "over {} techniques.\n",
                          *a.risk_coverage_correlation, a.risk_coverage.size());
    }

    if (metadata.contains("datasets")) {
        md += "\n## Dataset limitations\n\n";
        for (const auto& d : metadata.at("datasets")) {
            md += fmt::format("- {}: {}\n", d.value("name", ""),
                              join(d.value("limitations", std::vector<std::string>{}), "; "));
        }
    }
    return md;
}

std::vector<std::filesystem::path> emit_report(const std::filesystem::path& out_dir, const gaps::CoverageMatrix& matrix,
                                               const Analytics& analytics, const json& metadata,
                                               const EmitOptions& options)
{
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
        write_text_file_atomic(p, text);
        written.push_back(p);
    };

    put(out_dir / "report.json", dump_canonical(json{{"metadata", metadata}, {"analytics", to_json(analytics)}}));
    put(out_dir / "coverage_matrix.csv", coverage_matrix_csv(matrix));
    put(out_dir / "agreement.csv", agreement_csv(matrix, analytics));
    put(out_dir / "report.md", markdown(analytics, metadata));

    if (options.charts) {
        std::vector<svg::Bar> bars;
        std::vector<std::string> names;
        for (const auto& s : analytics.stats) {
            bars.push_back({s.dataset, s.mean_score});
            names.push_back(s.dataset);
        }
        put(out_dir / "charts" / "mean_coverage.svg", svg::bar_chart("Mean coverage score per dataset", bars));

        const std::vector<std::pair<Label, const char*>> palette{
            {Label::Full, "#1a9850"}, {Label::Partial, "#91cf60"}, {Label::Unknown, "#fee08b"}, {Label::No, "#d73027"}};
        std::vector<svg::Series> series;
        for (const auto& [label, color] : palette) {
            svg::Series s{std::string(coverage::to_string(label)), color, {}};
            for (const auto& st : analytics.stats) s.values.push_back(static_cast<double>(st.label_histogram.at(label)));
            series.push_back(std::move(s));
        }
        put(out_dir / "charts" / "label_distribution.svg",
            svg::stacked_bar_chart("Coverage label distribution", names, series));

        auto cells = analytics.dataset_overlap;
        for (std::size_t i = 0; i < names.size(); ++i) {
            cells[i][i] = (analytics.agreement && analytics.agreement->per_dataset.count(names[i]))
                              ? analytics.agreement->per_dataset.at(names[i])
                              : std::nan("");
        }
        put(out_dir / "charts" / "agreement_matrix.svg",
            svg::heatmap("Assessor agreement (diagonal) and dataset overlap", names, names, cells));

        std::vector<std::vector<double>> values;
        for (std::size_t t = 0; t < matrix.techniques().size(); ++t) {
            std::vector<double> row;
            for (std::size_t d = 0; d < matrix.datasets().size(); ++d) {
                row.push_back(coverage::numeric_value(matrix.cell(t, d)));
            }
            values.push_back(std::move(row));
        }
        put(out_dir / "charts" / "coverage_matrix.svg",
            svg::heatmap("Technique coverage by dataset", matrix.techniques(), names, values, false));
    }
    return written;
}

}  // namespace auditor::report
