#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace storm::cli {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

std::string svg_line_chart(const std::string& csv, const std::string& title,
                           bool log_log) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line)) throw std::runtime_error("svg: empty csv");
  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 2) throw std::runtime_error("svg: need at least two columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    std::vector<double> row;
    for (const auto& p : parts) {
      try {
        row.push_back(std::stod(p));
      } catch (...) {
        row.push_back(std::nan(""));
      }
    }
    if (row.size() == header.size()) rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("svg: no data rows");

  // column roles: x | series | error-for-previous-series
  std::vector<int> series_cols, err_of(header.size(), -1);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    if ((h == "yerr" || h == "stderr" || h == "stderr_") && !series_cols.empty())
      err_of[series_cols.back()] = int(c);
    else
      series_cols.push_back(int(c));
  }

  auto tx = [&](double v) { return log_log ? std::log10(v) : v; };

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : rows) {
    if (log_log && r[0] <= 0.0) continue;
    xmin = std::min(xmin, tx(r[0]));
    xmax = std::max(xmax, tx(r[0]));
    for (int c : series_cols) {
      if (std::isnan(r[c]) || (log_log && r[c] <= 0.0)) continue;
      ymin = std::min(ymin, tx(r[c]));
      ymax = std::max(ymax, tx(r[c]));
    }
  }
  if (xmin >= xmax) xmax = xmin + 1.0;
  if (ymin >= ymax) ymax = ymin + 1.0;

  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (tx(y) - ymin) / (ymax - ymin) * (H - T - B); };

  std::string svg;
  char buf[512];
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
                "font-family=\"sans-serif\">%s</text>\n",
                title.c_str());
  svg += buf;
  // axes
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L,
                H - B, W - R, H - B);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L,
                T, L, H - B);
  svg += buf;
  // tick labels at the extremes
  auto label = [&](double gx, double gy, double value, bool xaxis) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"%s\" font-size=\"11\" "
                  "font-family=\"sans-serif\">%.3g</text>\n",
                  gx, gy, xaxis ? "middle" : "end",
                  log_log ? std::pow(10.0, value) : value);
    svg += buf;
  };
  label(L, H - B + 18, xmin, true);
  label(W - R, H - B + 18, xmax, true);
  label(L - 6, H - B, ymin, false);
  label(L - 6, T + 10, ymax, false);
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"12\" "
                "font-family=\"sans-serif\">%s%s</text>\n",
                (L + W - R) / 2, H - 12, header[0].c_str(),
                log_log ? " (log)" : "");
  svg += buf;

  int color = 0;
  for (int c : series_cols) {
    std::string path;
    bool first = true;
    for (const auto& r : rows) {
      if (std::isnan(r[c]) || (log_log && (r[c] <= 0 || r[0] <= 0))) continue;
      std::snprintf(buf, sizeof(buf), "%s%g,%g", first ? "M" : " L", px(r[0]), py(r[c]));
      path += buf;
      first = false;
    }
    std::snprintf(buf, sizeof(buf),
                  "<path d=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                  path.c_str(), kColors[color % 5]);
    svg += buf;
    for (const auto& r : rows) {
      if (std::isnan(r[c]) || (log_log && (r[c] <= 0 || r[0] <= 0))) continue;
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%g\" cy=\"%g\" r=\"2.5\" fill=\"%s\"/>\n", px(r[0]),
                    py(r[c]), kColors[color % 5]);
      svg += buf;
      if (err_of[c] >= 0 && r[err_of[c]] > 0.0) {
        const double lo = r[c] - r[err_of[c]], hi = r[c] + r[err_of[c]];
        if (!log_log || lo > 0.0) {
          std::snprintf(
              buf, sizeof(buf),
              "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\"/>\n",
              px(r[0]), py(std::max(lo, 1e-300)), px(r[0]), py(hi), kColors[color % 5]);
          svg += buf;
        }
      }
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"%s\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  W - R - 120.0, T + 16.0 + 14.0 * color, kColors[color % 5],
                  header[c].c_str());
    svg += buf;
    ++color;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace storm::cli
