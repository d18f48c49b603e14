#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedfair/error.hpp"
#include "fedfair/report.hpp"

namespace fedfair {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 24, kTop = 44, kBottom = 56;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
constexpr const char* kNeutral = "#999999";

class SvgWriter {
 public:
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const std::string& dash = "") {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
             fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& fill, double opacity = 0.8) {
    body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) + "\" fill=\"" +
             fill + "\" fill-opacity=\"" + fmt(opacity) + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" +
             fmt(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start", const std::string& fill = "#333333") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" +
             std::to_string(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
             "\" fill=\"" + fill + "\">" + s + "</text>\n";
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"#ffffff\"/>\n"
        << body_ << "</svg>\n";
  }

 private:
  std::string body_;
};

// Deterministic color assignment: distinct labels sorted, palette in order.
std::map<std::string, std::string> color_map(const std::set<std::string>& labels) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  for (const auto& label : labels) {
    out[label] = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    ++i;
  }
  return out;
}

void draw_axes(SvgWriter& svg, double axis_max, const std::string& x_label,
               const std::string& y_label, const std::string& title) {
  svg.line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH, "#333333");
  svg.line(kLeft, kTop, kLeft, kTop + kPlotH, "#333333");
  for (int t = 0; t <= 5; ++t) {
    const double v = axis_max * t / 5.0;
    const double px = kLeft + kPlotW * t / 5.0;
    const double py = kTop + kPlotH - kPlotH * t / 5.0;
    svg.line(px, kTop + kPlotH, px, kTop + kPlotH + 4, "#333333");
    svg.text(px, kTop + kPlotH + 16, fmt(v), 9, "middle");
    svg.line(kLeft - 4, py, kLeft, py, "#333333");
    svg.text(kLeft - 6, py + 3, fmt(v), 9, "end");
  }
  svg.text(kLeft + kPlotW / 2, kHeight - 14, x_label, 11, "middle");
  svg.text(14, kTop + kPlotH / 2, y_label, 11, "middle");
  svg.text(kLeft + kPlotW / 2, 20, title, 13, "middle");
}

void draw_legend(SvgWriter& svg, const std::map<std::string, std::string>& colors) {
  double y = kTop + 4;
  for (const auto& [label, color] : colors) {
    svg.rect(kLeft + kPlotW - 110, y, 9, 9, color);
    svg.text(kLeft + kPlotW - 97, y + 8, label, 9);
    y += 14;
  }
}

std::string entry_color(const CompareEntry& e,
                        const std::map<std::string, std::string>& colors) {
  if (!e.biased_toward) return kNeutral;
  auto it = colors.find(e.biased_toward->describe());
  return it == colors.end() ? kNeutral : it->second;
}

void scatter_plot(const ComparisonReport& report, const std::filesystem::path& path) {
  SvgWriter svg;
  double axis_max = 0.05;
  for (const auto& e : report.entries) {
    if (e.local_value) axis_max = std::max(axis_max, *e.local_value);
    if (e.global_value) axis_max = std::max(axis_max, *e.global_value);
  }
  axis_max *= 1.1;

  const std::string metric = to_string(report.metric);
  draw_axes(svg, axis_max, "global " + metric, "local " + metric,
            "local vs global " + metric + " per client");
  // Unit diagonal; points below it got less fair through federation.
  svg.line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop, "#888888", 1.0, "4,3");

  std::set<std::string> labels;
  for (const auto& e : report.entries)
    if (e.biased_toward) labels.insert(e.biased_toward->describe());
  const auto colors = color_map(labels);

  for (const auto& e : report.entries) {
    if (!e.local_value || !e.global_value) continue;
    const double px = kLeft + kPlotW * (*e.global_value / axis_max);
    const double py = kTop + kPlotH - kPlotH * (*e.local_value / axis_max);
    svg.circle(px, py, 3.5, entry_color(e, colors));
  }
  draw_legend(svg, colors);
  svg.write(path);
}

void bars_plot(const ComparisonReport& report, const std::filesystem::path& path) {
  SvgWriter svg;
  std::vector<ClientId> clients;
  for (const auto& [id, acc] : report.accuracies) clients.push_back(id);

  double max_abs = 0.02;
  for (const auto& e : report.entries)
    if (e.delta) max_abs = std::max(max_abs, std::abs(*e.delta));
  max_abs *= 1.1;

  const double zero_y = kTop + kPlotH / 2;
  svg.line(kLeft, kTop, kLeft, kTop + kPlotH, "#333333");
  svg.line(kLeft, zero_y, kLeft + kPlotW, zero_y, "#333333");
  for (int t = -2; t <= 2; ++t) {
    const double v = max_abs * t / 2.0;
    const double py = zero_y - kPlotH / 2 * t / 2.0;
    svg.line(kLeft - 4, py, kLeft, py, "#333333");
    svg.text(kLeft - 6, py + 3, fmt(v), 9, "end");
  }
  const std::string metric = to_string(report.metric);
  svg.text(kLeft + kPlotW / 2, 20, "per-client " + metric + " delta (global - local)", 13,
           "middle");

  std::set<std::string> attr_set(report.attrs.begin(), report.attrs.end());
  const auto colors = color_map(attr_set);

  const double group_w = kPlotW / std::max<std::size_t>(1, clients.size());
  const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, report.attrs.size());
  const std::size_t label_step = clients.size() / 16 + 1;

  for (std::size_t c = 0; c < clients.size(); ++c) {
    for (std::size_t a = 0; a < report.attrs.size(); ++a) {
      const CompareEntry* entry = nullptr;
      for (const auto& e : report.entries)
        if (e.client == clients[c] && e.attr == report.attrs[a]) entry = &e;
      if (!entry || !entry->delta) continue;
      const double h = kPlotH / 2 * (*entry->delta / max_abs);
      const double x = kLeft + group_w * static_cast<double>(c) + group_w * 0.1 +
                       bar_w * static_cast<double>(a);
      if (h >= 0)
        svg.rect(x, zero_y - h, bar_w, h, colors.at(report.attrs[a]));
      else
        svg.rect(x, zero_y, bar_w, -h, colors.at(report.attrs[a]));
    }
    if (c % label_step == 0)
      svg.text(kLeft + group_w * (static_cast<double>(c) + 0.5), kTop + kPlotH + 16, clients[c],
               8, "middle");
  }
  draw_legend(svg, colors);
  svg.write(path);
}

void value_shift_plot(const ComparisonReport& report, const std::string& attr,
                      const std::filesystem::path& path) {
  SvgWriter svg;
  const std::string target =
      attr.empty() ? (report.attrs.empty() ? "" : report.attrs.front()) : attr;

  std::set<std::int32_t> values;
  for (const auto& e : report.entries) {
    if (e.attr != target) continue;
    if (e.argmax_before) values.insert(*e.argmax_before);
    if (e.argmax_after) values.insert(*e.argmax_after);
  }
  std::vector<std::int32_t> levels(values.begin(), values.end());
  auto level_y = [&](std::int32_t v) {
    const auto i = static_cast<double>(
        std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
    const double denom = std::max<double>(1.0, static_cast<double>(levels.size()) - 1.0);
    return kTop + kPlotH - kPlotH * i / denom;
  };

  const double x_left = kLeft + kPlotW * 0.25;
  const double x_right = kLeft + kPlotW * 0.75;
  svg.text(x_left, kTop + kPlotH + 24, "local argmax", 11, "middle");
  svg.text(x_right, kTop + kPlotH + 24, "global argmax", 11, "middle");
  svg.text(kLeft + kPlotW / 2, 20, "argmax " + target + " value shift per client", 13, "middle");
  for (auto v : levels) {
    svg.text(kLeft - 6, level_y(v) + 3, std::to_string(v), 9, "end");
    svg.line(kLeft, level_y(v), kLeft + kPlotW, level_y(v), "#eeeeee");
  }

  std::set<std::string> labels;
  for (auto v : levels) labels.insert(target + "=" + std::to_string(v));
  const auto colors = color_map(labels);

  for (const auto& e : report.entries) {
    if (e.attr != target || !e.argmax_before || !e.argmax_after) continue;
    const double y1 = level_y(*e.argmax_before);
    const double y2 = level_y(*e.argmax_after);
    const std::string color = colors.at(target + "=" + std::to_string(*e.argmax_after));
    svg.line(x_left, y1, x_right, y2, color, 1.0);
    svg.circle(x_left, y1, 3.0, color);
    svg.circle(x_right, y2, 3.0, color);
  }
  draw_legend(svg, colors);
  svg.write(path);
}

}  // namespace

void emit_svg(const ComparisonReport& report, PlotKind kind, const std::filesystem::path& path,
              const std::string& value_shift_attr) {
  switch (kind) {
    case PlotKind::scatter: scatter_plot(report, path); return;
    case PlotKind::bars: bars_plot(report, path); return;
    case PlotKind::value_shift: value_shift_plot(report, value_shift_attr, path); return;
  }
  throw ConfigError("emit_svg: unknown plot kind");
}

void emit_report_bars_svg(const std::vector<std::pair<ClientId, FairnessReport>>& reports,
                          const std::filesystem::path& path, const std::string& title) {
  SvgWriter svg;
  std::vector<std::string> attrs;
  if (!reports.empty())
    for (const auto& a : reports.front().second.attributes) attrs.push_back(a.attr);

  double axis_max = 0.05;
  for (const auto& [id, report] : reports)
    for (const auto& a : report.attributes)
      if (a.max_value) axis_max = std::max(axis_max, *a.max_value);
  axis_max *= 1.1;

  draw_axes(svg, axis_max, "client", "metric", title);
  std::set<std::string> attr_set(attrs.begin(), attrs.end());
  const auto colors = color_map(attr_set);

  const double group_w = kPlotW / std::max<std::size_t>(1, reports.size());
  const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, attrs.size());
  const std::size_t label_step = reports.size() / 16 + 1;
  for (std::size_t c = 0; c < reports.size(); ++c) {
    const auto& report = reports[c].second;
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      const AttrTable& table = report.attribute(attrs[a]);
      if (!table.max_value) continue;
      const double h = kPlotH * (*table.max_value / axis_max);
      const double x = kLeft + group_w * static_cast<double>(c) + group_w * 0.1 +
                       bar_w * static_cast<double>(a);
      svg.rect(x, kTop + kPlotH - h, bar_w, h, colors.at(attrs[a]));
    }
    if (c % label_step == 0)
      svg.text(kLeft + group_w * (static_cast<double>(c) + 0.5), kTop + kPlotH + 28,
               reports[c].first, 8, "middle");
  }
  draw_legend(svg, colors);
  svg.write(path);
}

}  // namespace fedfair
