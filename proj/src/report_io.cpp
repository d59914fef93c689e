#include "topotrack/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "topotrack/common.hpp"

namespace topotrack::report {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", value);
  return buf;
}

void write_table(const std::string& path, const Row& header, const std::vector<Row>& rows,
                 char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  const auto emit = [&](const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << delimiter;
      out << row[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

void write_line_chart_svg(const std::string& path,
                          const std::map<std::string, std::vector<double>>& series,
                          const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);

  constexpr int width = 960, height = 540, margin = 60;
  double lo = 0.0, hi = 1.0;
  std::size_t longest = 2;
  bool first = true;
  for (const auto& [name, values] : series) {
    for (double v : values) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    longest = std::max(longest, values.size());
  }
  if (hi == lo) hi = lo + 1.0;

  const auto x_of = [&](std::size_t i) {
    return margin + (width - 2.0 * margin) * static_cast<double>(i) /
                        static_cast<double>(longest - 1);
  };
  const auto y_of = [&](double v) {
    return height - margin - (height - 2.0 * margin) * (v - lo) / (hi - lo);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::size_t color = 0;
  int legend_y = margin;
  for (const auto& [name, values] : series) {
    const char* stroke = palette[color % (sizeof palette / sizeof palette[0])];
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out << ' ';
      out << x_of(i) << ',' << y_of(values[i]);
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 6 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << stroke << "\">" << name
        << "</text>\n";
    legend_y += 16;
    ++color;
  }

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", lo);
  out << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
      << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", hi);
  out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
      << "</text>\n";
  out << "</svg>\n";
}

void write_diagram(const std::string& path, const tda::PersistenceDiagram& diagram,
                   char delimiter) {
  std::vector<Row> rows;
  for (const auto& f : diagram.features)
    rows.push_back({format_number(f.birth),
                    std::isinf(f.death) ? "inf" : format_number(f.death),
                    std::to_string(f.dim)});
  write_table(path, {"birth", "death", "dim"}, rows, delimiter);
}

void write_landscape(const std::string& path, const tda::PersistenceLandscape& landscape,
                     char delimiter) {
  std::vector<Row> rows;
  for (std::size_t k = 1; k <= landscape.depth(); ++k)
    for (const auto& pt : landscape.functions[k - 1])
      rows.push_back({std::to_string(k), format_number(pt.x), format_number(pt.y)});
  write_table(path, {"k", "x", "y"}, rows, delimiter);
}

}  // namespace topotrack::report
