#include <algorithm>
#include <cmath>

#include "wardlab/analysis.hpp"
#include "wardlab/csv.hpp"

// Hand-emitted SVG: fixed viewBox, deterministic element order and fixed
// 2-decimal coordinates, so identical inputs produce identical bytes.

namespace wardlab::analysis {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 560.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 56.0;

std::string num(double v) { return csv::fmt_fixed(v, 2); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

QuadrantMap quadrant_map(const std::vector<CellSummary>& cells) {
  QuadrantMap map;

  double extent = 1.0;
  for (const auto& cell : cells) {
    if (!std::isfinite(cell.cpi.mean) || !std::isfinite(cell.di.mean)) {
      map.warnings.push_back("cell omitted (missing index values): " +
                             cell.key.label());
      continue;
    }
    QuadrantPoint point;
    point.key = cell.key;
    point.cpi = cell.cpi.mean;
    point.di = cell.di.mean;
    point.quadrant = quadrant_of(point.cpi, point.di);
    extent = std::max({extent, std::fabs(point.cpi), std::fabs(point.di)});
    map.points.push_back(std::move(point));
  }
  std::sort(map.points.begin(), map.points.end(),
            [](const QuadrantPoint& a, const QuadrantPoint& b) {
              return a.key < b.key;
            });
  // pad and snap the axis limit to a half unit
  extent = std::ceil(extent * 1.15 * 2.0) / 2.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double cpi) {
    return kMarginLeft + (cpi + extent) / (2.0 * extent) * plot_w;
  };
  auto py = [&](double di) {
    return kMarginTop + (extent - di) / (2.0 * extent) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
         num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<style>\n"
         ".series-C{fill:#2b6cb0;stroke:#2b6cb0;}\n"
         ".series-R{fill:#c0392b;stroke:#c0392b;}\n"
         ".axis{stroke:#444444;stroke-width:1;}\n"
         ".zero{stroke:#999999;stroke-width:1;stroke-dasharray:4 3;}\n"
         ".lbl{font-family:sans-serif;font-size:11px;fill:#222222;}\n"
         ".quad{font-family:sans-serif;font-size:13px;fill:#666666;}\n"
         ".tick{font-family:sans-serif;font-size:10px;fill:#444444;}\n"
         "</style>\n";

  // frame
  svg += "<rect x=\"" + num(kMarginLeft) + "\" y=\"" + num(kMarginTop) +
         "\" width=\"" + num(plot_w) + "\" height=\"" + num(plot_h) +
         "\" fill=\"none\" class=\"axis\"/>\n";
  // zero lines
  svg += "<line class=\"zero\" x1=\"" + num(px(0)) + "\" y1=\"" + num(py(-extent)) +
         "\" x2=\"" + num(px(0)) + "\" y2=\"" + num(py(extent)) + "\"/>\n";
  svg += "<line class=\"zero\" x1=\"" + num(px(-extent)) + "\" y1=\"" + num(py(0)) +
         "\" x2=\"" + num(px(extent)) + "\" y2=\"" + num(py(0)) + "\"/>\n";

  // axis extents
  for (double v : {-extent, 0.0, extent}) {
    svg += "<text class=\"tick\" x=\"" + num(px(v)) + "\" y=\"" +
           num(kHeight - kMarginBottom + 16.0) + "\" text-anchor=\"middle\">" +
           num(v) + "</text>\n";
    svg += "<text class=\"tick\" x=\"" + num(kMarginLeft - 8.0) + "\" y=\"" +
           num(py(v) + 3.0) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
  }
  svg += "<text class=\"lbl\" x=\"" + num(kMarginLeft + plot_w / 2.0) + "\" y=\"" +
         num(kHeight - 16.0) + "\" text-anchor=\"middle\">CPI</text>\n";
  svg += "<text class=\"lbl\" x=\"16\" y=\"" + num(kMarginTop + plot_h / 2.0) +
         "\" transform=\"rotate(-90 16 " + num(kMarginTop + plot_h / 2.0) +
         ")\" text-anchor=\"middle\">DI</text>\n";

  // quadrant labels
  svg += "<text class=\"quad\" x=\"" + num(px(extent) - 8.0) + "\" y=\"" +
         num(py(-extent) - 8.0) +
         "\" text-anchor=\"end\">collective excitation (CPI+/DI-)</text>\n";
  svg += "<text class=\"quad\" x=\"" + num(px(-extent) + 8.0) + "\" y=\"" +
         num(py(extent) + 16.0) +
         "\">internal dissociation (CPI-/DI+)</text>\n";
  svg += "<text class=\"quad\" x=\"" + num(px(extent) - 8.0) + "\" y=\"" +
         num(py(extent) + 16.0) +
         "\" text-anchor=\"end\">dual pattern (CPI+/DI+)</text>\n";
  svg += "<text class=\"quad\" x=\"" + num(px(-extent) + 8.0) + "\" y=\"" +
         num(py(-extent) - 8.0) + "\">baseline (CPI-/DI-)</text>\n";

  // points: JA circles, EN squares; color class by series
  for (const auto& point : map.points) {
    double x = px(point.cpi);
    double y = py(point.di);
    std::string cls = "series-" + to_string(point.key.series);
    if (point.key.language == Language::JA) {
      svg += "<circle class=\"" + cls + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) +
             "\" r=\"5\"/>\n";
    } else {
      svg += "<rect class=\"" + cls + "\" x=\"" + num(x - 4.5) + "\" y=\"" +
             num(y - 4.5) + "\" width=\"9\" height=\"9\"/>\n";
    }
    std::string label = point.key.group + " " + to_string(point.key.condition) +
                        " " + to_string(point.key.language);
    svg += "<text class=\"lbl\" x=\"" + num(x + 7.0) + "\" y=\"" + num(y - 5.0) +
           "\">" + xml_escape(label) + "</text>\n";
  }
  svg += "</svg>\n";
  map.svg = std::move(svg);
  return map;
}

void write_quadrant_csv(const std::filesystem::path& path,
                        const std::vector<QuadrantPoint>& points) {
  csv::Table t;
  t.header = {"series", "group", "condition", "language", "cpi", "di", "quadrant"};
  for (const auto& p : points) {
    t.rows.push_back({to_string(p.key.series), p.key.group,
                      to_string(p.key.condition), to_string(p.key.language),
                      csv::fmt_double(p.cpi), csv::fmt_double(p.di),
                      to_string(p.quadrant)});
  }
  csv::write_file(path, t);
}

}  // namespace wardlab::analysis
