#include "wgcorr/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace wgcorr {

std::string format_double(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string quote(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '&':
      out += "&amp;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

} // namespace

CsvWriter::CsvWriter(const std::string &path, std::vector<std::string> header)
    : out_(path, std::ios::binary), width_(header.size()), path_(path) {
  if (!out_)
    throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << quote(header[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell> &cells) {
  if (cells.size() != width_)
    throw std::logic_error("CsvWriter: row width differs from header in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i)
      out_ << ',';
    if (const auto *d = std::get_if<double>(&cells[i]))
      out_ << format_double(*d);
    else if (const auto *n = std::get_if<std::int64_t>(&cells[i]))
      out_ << *n;
    else
      out_ << quote(std::get<std::string>(cells[i]));
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_)
    throw std::runtime_error("error writing " + path_);
}

void write_svg_plot(const std::string &path, const PlotSpec &spec,
                    const std::vector<PlotSeries> &series) {
  constexpr double W = 720, H = 480, L = 80, R = 160, T = 40, B = 60;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto &s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (!(x0 <= x1)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  if (x1 == x0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::FILE *f = std::fopen(path.c_str(), "wb");
  if (!f)
    throw std::runtime_error("cannot write " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
               "font-family=\"sans-serif\" font-size=\"12\">\n",
               W, H);
  std::fprintf(f, "<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", W, H);
  std::fprintf(f, "<text x=\"%g\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
               (W - R + L) / 2, xml_escape(spec.title).c_str());
  std::fprintf(f,
               "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
               "stroke=\"black\"/>\n",
               L, T, W - L - R, H - T - B);
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = L + (W - L - R) * i / 4.0, sy = H - B - (H - T - B) * i / 4.0;
    std::fprintf(f, "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%s%.4g</text>\n", sx,
                 H - B + 16, spec.log_x ? "1e" : "", fx);
    std::fprintf(f, "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%s%.4g</text>\n", L - 6,
                 sy + 4, spec.log_y ? "1e" : "", fy);
  }
  std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
               (W - R + L) / 2, H - 16, xml_escape(spec.x_label).c_str());
  std::fprintf(f,
               "<text x=\"18\" y=\"%g\" text-anchor=\"middle\" "
               "transform=\"rotate(-90 18 %g)\">%s</text>\n",
               (H - B + T) / 2, (H - B + T) / 2, xml_escape(spec.y_label).c_str());
  static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto &s = series[k];
    const char *c = colors[k % 8];
    std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"", c);
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i]))
        std::fprintf(f, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
    std::fprintf(f, "\"/>\n");
    const double ly = T + 14 + 16.0 * double(k);
    std::fprintf(f,
                 "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" "
                 "stroke-width=\"2\"/>\n",
                 W - R + 10, ly - 4, W - R + 30, ly - 4, c);
    std::fprintf(f, "<text x=\"%g\" y=\"%g\">%s</text>\n", W - R + 36, ly,
                 xml_escape(s.name).c_str());
  }
  std::fprintf(f, "</svg>\n");
  if (std::fclose(f) != 0)
    throw std::runtime_error("error writing " + path);
}

} // namespace wgcorr
