#include "ergodyn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"

namespace ergodyn {

namespace fs = std::filesystem;

namespace {

bool to_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string svg_line_plot(const std::string& xlabel, const std::string& ylabel, const std::vector<double>& x,
                          const std::vector<double>& y) {
  constexpr double W = 640, H = 400, L = 80, R = 20, T = 30, B = 50;
  double x0 = x.front(), x1 = x.front(), y0 = y.front(), y1 = y.front();
  for (std::size_t i = 0; i < x.size(); ++i) {
    x0 = std::min(x0, x[i]);
    x1 = std::max(x1, x[i]);
    y0 = std::min(y0, y[i]);
    y1 = std::max(y1, y[i]);
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << svg_escape(xlabel)
     << "</text>\n";
  os << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << T + 5 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt_double(y1)
     << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << fmt_double(y0)
     << "</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 15 << "\" font-size=\"10\">" << fmt_double(x0) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 15 << "\" text-anchor=\"end\" font-size=\"10\">"
     << fmt_double(x1) << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) os << px(x[i]) << "," << py(y[i]) << " ";
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace

std::vector<fs::path> plot_csv(const fs::path& csv, const fs::path& out_dir) {
  std::ifstream in(csv);
  if (!in) throw InvalidInput("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(csv.string() + " is empty");
  const auto header = split_row(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_row(line));
  }
  if (header.empty() || rows.empty()) throw InvalidInput(csv.string() + " has no data rows");

  auto column_numeric = [&](std::size_t c) {
    bool any = false;
    for (const auto& r : rows) {
      double v;
      if (c >= r.size()) return false;
      if (to_number(r[c], v)) {
        any = true;
      } else if (r[c] != "nan" && r[c] != "-nan" && r[c] != "inf" && r[c] != "-inf") {
        return false;
      }
    }
    return any;
  };
  const bool x_numeric = column_numeric(0);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (std::size_t c = x_numeric ? 1 : 0; c < header.size(); ++c) {
    if (!column_numeric(c)) continue;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double x = static_cast<double>(i), y;
      if (x_numeric && !to_number(rows[i][0], x)) continue;
      if (!to_number(rows[i][c], y) || !std::isfinite(y) || !std::isfinite(x)) continue;
      xs.push_back(x);
      ys.push_back(y);
    }
    if (xs.empty()) continue;
    const fs::path file = out_dir / (csv.stem().string() + "_" + header[c] + ".svg");
    std::ofstream out(file);
    out << svg_line_plot(x_numeric ? header[0] : "row", header[c], xs, ys);
    written.push_back(file);
  }
  return written;
}

}  // namespace ergodyn
