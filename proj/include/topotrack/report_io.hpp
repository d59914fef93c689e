#pragma once

#include <map>
#include <string>
#include <vector>

#include "topotrack/tda.hpp"

// Flat-file emission: delimiter-separated tables in full-precision
// scientific notation, plus a static SVG line chart for wealth curves.

namespace topotrack::report {

/// Locale-independent full-precision scientific formatting.
std::string format_number(double value);

using Row = std::vector<std::string>;

/// Write a header row plus data rows, fields joined by `delimiter`.
void write_table(const std::string& path, const Row& header, const std::vector<Row>& rows,
                 char delimiter = ',');

/// Static SVG line chart of one or more named series (wealth curves).
void write_line_chart_svg(const std::string& path,
                          const std::map<std::string, std::vector<double>>& series,
                          const std::string& title);

/// Debug dump of a persistence diagram as (birth, death, dim) rows; the
/// essential feature's death is written as "inf".
void write_diagram(const std::string& path, const tda::PersistenceDiagram& diagram,
                   char delimiter = ',');

/// Debug dump of a landscape as (k, x, y) critical-point rows.
void write_landscape(const std::string& path, const tda::PersistenceLandscape& landscape,
                     char delimiter = ',');

}  // namespace topotrack::report
