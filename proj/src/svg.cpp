#include "auditor/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace auditor::svg {

namespace {

std::string num(double v)
{
    return fmt::format("{:.2f}", v);
}

std::string ramp(double v)
{
    const double t = std::clamp(v, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 - t * (255 - 33)));
    const int g = static_cast<int>(std::lround(255 - t * (255 - 102)));
    const int b = static_cast<int>(std::lround(255 - t * (255 - 172)));
    return fmt::format("rgb({},{},{})", r, g, b);
}

}  // namespace

std::string escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c; break;
        }
    }
    return out;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

Document& Document::rect(double x, double y, double w, double h, std::string_view fill, std::string_view title)
{
    if (title.empty()) {
        elements_.push_back(fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>)", num(x), num(y),
                                        num(w), num(h), fill));
    } else {
        elements_.push_back(fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}</title></rect>)",
                                        num(x), num(y), num(w), num(h), fill, escape(title)));
    }
    return *this;
}

Document& Document::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width)
{
    elements_.push_back(fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"/>)",
                                    num(x1), num(y1), num(x2), num(y2), stroke, num(width)));
    return *this;
}

Document& Document::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                         double rotate_deg)
{
    std::string transform;
    if (rotate_deg != 0.0) {
        transform = fmt::format(R"x( transform="rotate({} {} {})")x", num(rotate_deg), num(x), num(y));
    }
    elements_.push_back(fmt::format(
        R"(<text x="{}" y="{}" font-family="sans-serif" font-size="{}" text-anchor="{}"{}>{}</text>)", num(x),
        num(y), num(size), anchor, transform, escape(content)));
    return *this;
}

std::string Document::str() const
{
    std::string out = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        num(width_), num(height_));
    out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", num(width_), num(height_));
    for (const auto& e : elements_) {
        out += e;
        out += '\n';
    }
    out += "</svg>\n";
    return out;
}

std::string bar_chart(std::string_view title, const std::vector<Bar>& bars, double y_max)
{
    const double left = 60, right = 20, top = 40, bottom = 90, slot = 70;
    const double plot_h = 260;
    const double width = left + right + slot * static_cast<double>(std::max<std::size_t>(bars.size(), 1));
    Document doc(width, top + plot_h + bottom);
    doc.text(width / 2, 24, title, 15, "middle");
    for (int i = 0; i <= 4; ++i) {
        const double v = y_max * i / 4.0;
        const double y = top + plot_h - plot_h * i / 4.0;
        doc.line(left, y, width - right, y, "#dddddd");
        doc.text(left - 6, y + 4, fmt::format("{:.2f}", v), 10, "end");
    }
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double h = y_max > 0 ? plot_h * std::clamp(bars[i].value / y_max, 0.0, 1.0) : 0.0;
        const double x = left + slot * static_cast<double>(i) + 12;
        doc.rect(x, top + plot_h - h, slot - 24, h, "#2166ac", fmt::format("{}: {:.3f}", bars[i].label, bars[i].value));
        doc.text(x + (slot - 24) / 2, top + plot_h - h - 4, fmt::format("{:.3f}", bars[i].value), 10, "middle");
        doc.text(x + (slot - 24) / 2, top + plot_h + 14, bars[i].label, 10, "end", -35);
    }
    doc.line(left, top + plot_h, width - right, top + plot_h, "black");
    return doc.str();
}

std::string stacked_bar_chart(std::string_view title, const std::vector<std::string>& categories,
                              const std::vector<Series>& series)
{
    const double left = 60, right = 140, top = 40, bottom = 90, slot = 70, plot_h = 260;
    double y_max = 0.0;
    for (std::size_t c = 0; c < categories.size(); ++c) {
        double total = 0.0;
        for (const auto& s : series) total += c < s.values.size() ? s.values[c] : 0.0;
        y_max = std::max(y_max, total);
    }
    if (y_max <= 0.0) y_max = 1.0;
    const double width = left + right + slot * static_cast<double>(std::max<std::size_t>(categories.size(), 1));
    Document doc(width, top + plot_h + bottom);
    doc.text((width - right + left) / 2, 24, title, 15, "middle");
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double x = left + slot * static_cast<double>(c) + 12;
        double y = top + plot_h;
        for (const auto& s : series) {
            const double v = c < s.values.size() ? s.values[c] : 0.0;
            const double h = plot_h * v / y_max;
            y -= h;
            if (h > 0) doc.rect(x, y, slot - 24, h, s.color, fmt::format("{} / {}: {}", categories[c], s.name, v));
        }
        doc.text(x + (slot - 24) / 2, top + plot_h + 14, categories[c], 10, "end", -35);
    }
    doc.line(left, top + plot_h, width - right, top + plot_h, "black");
    doc.text(left - 6, top + 4, fmt::format("{}", y_max), 10, "end");
    doc.text(left - 6, top + plot_h + 4, "0", 10, "end");
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double y = top + 20.0 * static_cast<double>(i);
        doc.rect(width - right + 16, y, 12, 12, series[i].color);
        doc.text(width - right + 34, y + 10, series[i].name, 11);
    }
    return doc.str();
}

std::string heatmap(std::string_view title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::vector<std::vector<double>>& cells,
                    bool annotate)
{
    const double cell = row_labels.size() > 40 ? 12 : 44;
    const double left = 120, top = 110, right = 20, bottom = 20;
    const double width = left + right + cell * static_cast<double>(col_labels.size());
    const double height = top + bottom + cell * static_cast<double>(row_labels.size());
    Document doc(width, height);
    doc.text(width / 2, 24, title, 15, "middle");
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
        doc.text(left + cell * (static_cast<double>(c) + 0.5), top - 6, col_labels[c], 10, "start", -45);
    }
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        const double y = top + cell * static_cast<double>(r);
        doc.text(left - 6, y + cell / 2 + 4, row_labels[r], cell < 20 ? 8 : 11, "end");
        for (std::size_t c = 0; c < col_labels.size(); ++c) {
            const double v = (r < cells.size() && c < cells[r].size()) ? cells[r][c] : std::nan("");
            const double x = left + cell * static_cast<double>(c);
            const bool missing = std::isnan(v);
            doc.rect(x, y, cell - 1, cell - 1, missing ? "#bbbbbb" : ramp(v),
                     fmt::format("{} / {}: {}", row_labels[r], col_labels[c], missing ? "n/a" : fmt::format("{:.3f}", v)));
            if (annotate && cell >= 40) {
                doc.text(x + cell / 2, y + cell / 2 + 4, missing ? "n/a" : fmt::format("{:.2f}", v), 10, "middle");
            }
        }
    }
    return doc.str();
}

}  // namespace auditor::svg
