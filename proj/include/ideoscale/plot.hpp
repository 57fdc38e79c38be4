#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ideoscale/report.hpp"

namespace ideoscale {

/// Header-keyed rows of a tab-separated export.
struct TsvTable {
  std::vector<std::string> columns;
  std::vector<std::map<std::string, std::string>> rows;
};

inline TsvTable read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("plot: cannot open " + path.string());
  TsvTable t;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      auto tab = s.find('\t', start);
      out.push_back(s.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    return out;
  };
  if (!std::getline(in, line)) return t;
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < t.columns.size() && i < cells.size(); ++i) row[t.columns[i]] = cells[i];
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(1);
  o << v;
  return o.str();
}

inline constexpr const char* kClassColors[] = {"#c0392b", "#7f8c8d", "#2c3e80"};

class Svg {
public:
  Svg(int w, int h) : w_(w), h_(h) {}
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333", double width = 1) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
          << "\" fill=\"" << fill << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r) << "\" fill=\"" << fill
          << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x) << ',' << fmt(y) << ' ';
    body_ << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 12, const std::string& anchor = "middle") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << xml_escape(s) << "</text>\n";
  }
  std::string str() const {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
      << w_ << ' ' << h_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return o.str();
  }

private:
  int w_, h_;
  std::ostringstream body_;
};

inline void save(const std::filesystem::path& path, const Svg& svg, std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("plot: cannot write " + path.string());
  out << svg.str();
  written.push_back(path.string());
}

inline int class_index(const std::string& cls) {
  if (cls == "left") return 0;
  if (cls == "neutral") return 1;
  return 2;
}

inline void axes(Svg& svg, double x0, double y0, double x1, double y1, double lo, double hi, int ticks) {
  svg.line(x0, y0, x1, y0);
  svg.line(x0, y0, x0, y1);
  for (int t = 0; t <= ticks; ++t) {
    const double v = lo + (hi - lo) * t / ticks;
    const double y = y0 - (y0 - y1) * t / ticks;
    svg.line(x0 - 4, y, x0, y);
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(1);
    o << v;
    svg.text(x0 - 8, y + 4, o.str(), 10, "end");
  }
}

}  // namespace detail

/// F1 bars per backend and class, one chart per benchmark.
inline void plot_f1(const TsvTable& metrics, const std::filesystem::path& dir, std::vector<std::string>& written) {
  std::map<std::string, std::map<std::string, std::array<double, 3>>> by_bench;
  std::map<std::string, std::vector<std::string>> order;
  for (const auto& r : metrics.rows) {
    auto& per_backend = by_bench[r.at("benchmark")];
    auto& ord = order[r.at("benchmark")];
    if (!per_backend.count(r.at("backend"))) ord.push_back(r.at("backend"));
    per_backend[r.at("backend")][detail::class_index(r.at("class"))] = std::stod(r.at("f1"));
  }
  for (const auto& [bench, per_backend] : by_bench) {
    const auto& backends = order[bench];
    const int w = 120 + 150 * static_cast<int>(backends.size()), h = 360;
    detail::Svg svg(w, h);
    const double x0 = 60, y0 = h - 60, y1 = 40;
    svg.text(w / 2.0, 24, "F1 by class vs " + bench + " gold", 14);
    detail::axes(svg, x0, y0, w - 20, y1, 0, 1, 5);
    for (std::size_t b = 0; b < backends.size(); ++b) {
      const double gx = x0 + 20 + 150.0 * b;
      const auto& vals = per_backend.at(backends[b]);
      for (int c = 0; c < 3; ++c) {
        const double bh = (y0 - y1) * std::clamp(vals[c], 0.0, 1.0);
        svg.rect(gx + 40.0 * c, y0 - bh, 34, bh, detail::kClassColors[c]);
      }
      svg.text(gx + 57, y0 + 18, backends[b], 11);
    }
    const char* names[] = {"left", "neutral", "right"};
    for (int c = 0; c < 3; ++c) {
      svg.rect(x0 + 10 + 80.0 * c, h - 24, 10, 10, detail::kClassColors[c]);
      svg.text(x0 + 24 + 80.0 * c, h - 15, names[c], 11, "start");
    }
    detail::save(dir / ("f1_" + bench + ".svg"), svg, written);
  }
}

/// Standardized model position against each human benchmark.
inline void plot_scores(const TsvTable& scores, const std::filesystem::path& dir, std::vector<std::string>& written) {
  std::map<std::string, std::map<std::string, double>> z;  // source -> manifesto -> z
  std::vector<std::string> models;
  for (const auto& r : scores.rows) {
    if (r.at("z") == "undefined") continue;
    const auto& src = r.at("source");
    if (!z.count(src) && src != "expert" && src != "crowd") models.push_back(src);
    z[src][r.at("manifesto")] = std::stod(r.at("z"));
  }
  for (const auto& model : models) {
    for (const std::string human : {"expert", "crowd"}) {
      if (!z.count(human)) continue;
      std::vector<std::pair<double, double>> pts;
      for (const auto& [m, v] : z[model])
        if (z[human].count(m)) pts.emplace_back(z[human][m], v);
      if (pts.empty()) continue;
      double lim = 1.0;
      for (const auto& [x, y] : pts) lim = std::max({lim, std::abs(x), std::abs(y)});
      lim = std::ceil(lim);
      const int w = 420, h = 420;
      detail::Svg svg(w, h);
      const double x0 = 60, y0 = h - 50, x1 = w - 20, y1 = 40;
      const auto px = [&](double v) { return x0 + (x1 - x0) * (v + lim) / (2 * lim); };
      const auto py = [&](double v) { return y0 - (y0 - y1) * (v + lim) / (2 * lim); };
      svg.text(w / 2.0, 24, model + " vs " + human + " (z)", 14);
      detail::axes(svg, x0, y0, x1, y1, -lim, lim, 4);
      svg.line(px(-lim), py(-lim), px(lim), py(lim), "#bbb");
      for (const auto& [x, y] : pts) svg.circle(px(x), py(y), 4, "#2c3e80");
      svg.text(w / 2.0, h - 12, human + " position", 11);
      detail::save(dir / ("scores_" + model + "_" + human + ".svg"), svg, written);
    }
  }
}

/// F1 by training size, one line per class, expert benchmark.
inline void plot_sweep(const TsvTable& sweep, const std::filesystem::path& dir, std::vector<std::string>& written) {
  std::map<int, std::map<double, double>> lines;
  for (const auto& r : sweep.rows) {
    if (r.at("benchmark") != "expert") continue;
    lines[detail::class_index(r.at("class"))][std::stod(r.at("size"))] = std::stod(r.at("f1"));
  }
  if (lines.empty()) return;
  double lo = 1e300, hi = -1e300;
  for (const auto& [c, pts] : lines)
    for (const auto& [x, y] : pts) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (hi == lo) hi = lo + 1;
  const int w = 480, h = 360;
  detail::Svg svg(w, h);
  const double x0 = 60, y0 = h - 60, x1 = w - 20, y1 = 40;
  svg.text(w / 2.0, 24, "F1 by training set size", 14);
  detail::axes(svg, x0, y0, x1, y1, 0, 1, 5);
  for (const auto& [c, pts] : lines) {
    std::vector<std::pair<double, double>> poly;
    for (const auto& [x, y] : pts) {
      const double px = x0 + (x1 - x0) * (x - lo) / (hi - lo);
      const double py = y0 - (y0 - y1) * std::clamp(y, 0.0, 1.0);
      poly.emplace_back(px, py);
      svg.circle(px, py, 3, detail::kClassColors[c]);
      if (c == 0) svg.text(px, y0 + 16, std::to_string(static_cast<long>(x)), 10);
    }
    svg.polyline(poly, detail::kClassColors[c]);
  }
  detail::save(dir / "sweep_f1.svg", svg, written);
}

/// Renders every chart the exports in `dir` support; returns the paths.
inline std::vector<std::string> plot_report(const std::filesystem::path& dir) {
  std::vector<std::string> written;
  const auto out = dir / "plots";
  std::filesystem::create_directories(out);
  if (std::filesystem::exists(dir / "metrics.tsv")) plot_f1(read_tsv(dir / "metrics.tsv"), out, written);
  if (std::filesystem::exists(dir / "scores.tsv")) plot_scores(read_tsv(dir / "scores.tsv"), out, written);
  if (std::filesystem::exists(dir / "sweep" / "sweep_metrics.tsv"))
    plot_sweep(read_tsv(dir / "sweep" / "sweep_metrics.tsv"), out, written);
  if (written.empty()) throw Error("plot: no exported tables found in " + dir.string());
  return written;
}

}  // namespace ideoscale
