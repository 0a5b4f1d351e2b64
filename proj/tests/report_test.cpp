#include "geoscore/report.hpp"

#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "geoscore/error.hpp"

namespace geoscore::report {
namespace {

TEST(Csv, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("line\nbreak"), "\"line\nbreak\"");
}

TEST(Csv, RowsEndInCrlf) {
  std::ostringstream out;
  write_csv_row(out, {"a", "b,c", ""});
  EXPECT_EQ(out.str(), "a,\"b,c\",\r\n");
}

TEST(Csv, ParseRoundTrip) {
  const std::vector<std::vector<std::string>> rows{{"x", "y, z", "q\"uote"}, {"", "multi\r\nline", "3"}};
  std::ostringstream out;
  for (const auto& r : rows) write_csv_row(out, r);
  EXPECT_EQ(parse_csv(out.str()), rows);
  EXPECT_EQ(parse_csv("a,b\nc,d"), (std::vector<std::vector<std::string>>{{"a", "b"}, {"c", "d"}}));
  EXPECT_THROW(parse_csv("\"open"), FormatError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Svg, OnePolylinePerSeries) {
  const std::vector<Series> series{{"gen-a", {0, 1, 2}, {1.0, 2.0, 1.5}}, {"gen<b>", {0, 1, 2}, {0.5, 0.7, 0.9}}};
  const std::string svg = line_chart_svg("erank", "layer", "erank", series);
  const std::regex poly("<polyline [^>]*points=\"([^\"]*)\"");
  std::vector<std::string> points;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
    points.push_back((*it)[1]);
  }
  ASSERT_EQ(points.size(), 2u);
  for (const auto& p : points) EXPECT_EQ(std::count(p.begin(), p.end(), ','), 3);
  EXPECT_NE(svg.find("gen&lt;b&gt;"), std::string::npos);
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
  EXPECT_EQ(svg, line_chart_svg("erank", "layer", "erank", series));
}

TEST(Svg, HandlesFlatAndEmptyInput) {
  EXPECT_NO_THROW(line_chart_svg("t", "x", "y", {}));
  const std::string flat = line_chart_svg("t", "x", "y", {{"s", {3}, {1.0}}});
  EXPECT_EQ(flat.find("nan"), std::string::npos);
  EXPECT_EQ(flat.find("inf"), std::string::npos);
}

}  // namespace
}  // namespace geoscore::report
