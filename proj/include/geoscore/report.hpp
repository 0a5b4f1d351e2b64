#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace geoscore::report {

// RFC 4180: fields containing a comma, quote, CR or LF are quoted with inner
// quotes doubled; records end in CRLF.
std::string csv_field(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Parses RFC 4180 text (CRLF or LF record ends). FormatError on an
// unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Shortest representation that round-trips a double.
std::string format_double(double v);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG 1.1 line chart, one polyline per series, fixed-precision
// coordinates so identical input gives identical bytes.
std::string line_chart_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                           const std::vector<Series>& series);

}  // namespace geoscore::report
