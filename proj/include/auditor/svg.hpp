#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace auditor::svg {

std::string escape(std::string_view text);

/// Minimal SVG 1.1 document builder; coordinates in user units.
class Document {
public:
    Document(double width, double height);

    Document& rect(double x, double y, double w, double h, std::string_view fill, std::string_view title = {});
    Document& line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0);
    Document& text(double x, double y, std::string_view content, double size = 12.0,
                   std::string_view anchor = "start", double rotate_deg = 0.0);

    std::string str() const;

private:
    double width_;
    double height_;
    std::vector<std::string> elements_;
};

struct Bar {
    std::string label;
    double value = 0.0;
};

/// Vertical bar chart with values in [0, y_max].
std::string bar_chart(std::string_view title, const std::vector<Bar>& bars, double y_max = 1.0);

struct Series {
    std::string name;
    std::string color;
    std::vector<double> values;  ///< one per category
};

std::string stacked_bar_chart(std::string_view title, const std::vector<std::string>& categories,
                              const std::vector<Series>& series);

/// Cells in [0, 1], drawn on a white-to-blue ramp; NaN cells drawn grey.
std::string heatmap(std::string_view title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::vector<std::vector<double>>& cells,
                    bool annotate = true);

}  // namespace auditor::svg
