#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace wgcorr {

/// Round-trip decimal form: 17 significant digits.
std::string format_double(double x);

using CsvCell = std::variant<double, std::int64_t, std::string>;

/// Comma-separated file with a fixed header; rows must match its width.
class CsvWriter {
public:
  CsvWriter(const std::string &path, std::vector<std::string> header);
  void row(const std::vector<CsvCell> &cells);
  void close();

private:
  std::ofstream out_;
  std::size_t width_;
  std::string path_;
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Static SVG line plot. Nonpositive values are skipped on log axes.
void write_svg_plot(const std::string &path, const PlotSpec &spec,
                    const std::vector<PlotSeries> &series);

} // namespace wgcorr
