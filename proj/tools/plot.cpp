// Copyright 2026 The dvsmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dvsmc::cli {
namespace {

constexpr double kPanelWidth = 440.0;
constexpr double kPanelHeight = 330.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 16.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 52.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

const eval::Interval& pick(const eval::Aggregate& a, Metric m) {
  switch (m) {
    case Metric::kTrackingError: return a.tracking_error;
    case Metric::kLikelihood: return a.likelihood;
    case Metric::kKl: return a.kl;
    case Metric::kElbo: return a.elbo;
  }
  throw std::logic_error("unknown metric");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (span / step <= 6.0) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return t;
}

void range(const Panel& p, double& x0, double& x1, double& y0, double& y1) {
  x0 = y0 = std::numeric_limits<double>::infinity();
  x1 = y1 = -std::numeric_limits<double>::infinity();
  for (const auto& s : p.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      for (double y : {s.low[i], s.high[i], s.mean[i]}) {
        if (!std::isfinite(y)) continue;
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
  if (x1 <= x0) x0 -= 0.5, x1 += 0.5;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double xpad = 0.05 * (x1 - x0);
  const double ypad = 0.08 * (y1 - y0);
  x0 -= xpad, x1 += xpad, y0 -= ypad, y1 += ypad;
}

void render_panel(std::ostringstream& svg, const Panel& p, double ox) {
  double x0, x1, y0, y1;
  range(p, x0, x1, y0, y1);
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  auto sx = [&](double x) { return ox + kLeft + (x - x0) / (x1 - x0) * w; };
  auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * h; };

  svg << "<g>\n<text x=\"" << ox + kLeft + w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(p.title) << "</text>\n";
  svg << "<rect x=\"" << ox + kLeft << "\" y=\"" << kTop << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (double t : ticks(x0, x1)) {
    svg << "<line x1=\"" << sx(t) << "\" y1=\"" << kTop + h << "\" x2=\"" << sx(t) << "\" y2=\"" << kTop + h + 5
        << "\" stroke=\"#333\"/><text x=\"" << sx(t) << "\" y=\"" << kTop + h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << num(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    svg << "<line x1=\"" << ox + kLeft - 5 << "\" y1=\"" << sy(t) << "\" x2=\"" << ox + kLeft << "\" y2=\"" << sy(t)
        << "\" stroke=\"#333\"/><line x1=\"" << ox + kLeft << "\" y1=\"" << sy(t) << "\" x2=\"" << ox + kLeft + w
        << "\" y2=\"" << sy(t) << "\" stroke=\"#eee\"/><text x=\"" << ox + kLeft - 8 << "\" y=\"" << sy(t) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << num(t) << "</text>\n";
  }
  svg << "<text x=\"" << ox + kLeft + w / 2 << "\" y=\"" << kPanelHeight - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.x_label) << "</text>\n";
  svg << "<text transform=\"translate(" << ox + 16 << "," << kTop + h / 2
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.y_label) << "</text>\n";

  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const Series& s = p.series[k];
    const char* color = kColors[k % std::size(kColors)];
    svg << "<g class=\"series\" data-method=\"" << escape(s.name) << "\">\n<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) svg << (i ? " " : "") << sx(s.x[i]) << "," << sy(s.mean[i]);
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double cx = sx(s.x[i]);
      if (std::isfinite(s.low[i]) && std::isfinite(s.high[i]) && s.high[i] > s.low[i]) {
        svg << "<path class=\"errorbar\" d=\"M" << cx << "," << sy(s.low[i]) << "V" << sy(s.high[i]) << "M" << cx - 4
            << "," << sy(s.low[i]) << "h8M" << cx - 4 << "," << sy(s.high[i]) << "h8\" stroke=\"" << color
            << "\"/>\n";
      }
      svg << "<circle cx=\"" << cx << "\" cy=\"" << sy(s.mean[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "</g>\n";
  }

  svg << "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const double ly = kTop + 14 + 16 * static_cast<double>(k);
    const double lx = ox + kLeft + w - 96;
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 18 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << kColors[k % std::size(kColors)] << "\" stroke-width=\"2\"/><text x=\"" << lx + 24
        << "\" y=\"" << ly << "\" font-size=\"11\">" << escape(p.series[k].name) << "</text>\n";
  }
  svg << "</g>\n</g>\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::kTrackingError: return "tracking_error";
    case Metric::kLikelihood: return "likelihood";
    case Metric::kKl: return "kl";
    case Metric::kElbo: return "elbo";
  }
  throw std::logic_error("unknown metric");
}

std::vector<Series> collect_series(const eval::EvalReport& report, Metric metric) {
  std::vector<Series> out;
  for (const auto& a : report.aggregates) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == a.method; });
    if (it == out.end()) {
      out.push_back({a.method, {}, {}, {}, {}});
      it = out.end() - 1;
    }
    const eval::Interval& v = pick(a, metric);
    it->x.push_back(a.condition);
    it->mean.push_back(v.mean);
    it->low.push_back(v.low());
    it->high.push_back(v.high());
  }
  for (auto& s : out) {
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    Series sorted{s.name, {}, {}, {}, {}};
    for (std::size_t i : order) {
      sorted.x.push_back(s.x[i]);
      sorted.mean.push_back(s.mean[i]);
      sorted.low.push_back(s.low[i]);
      sorted.high.push_back(s.high[i]);
    }
    s = std::move(sorted);
  }
  return out;
}

void write_series_csv(const std::vector<Series>& series, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "method,condition,mean,ci_low,ci_high\n";
  char buf[160];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", s.x[i], s.mean[i], s.low[i], s.high[i]);
      out << s.name << ',' << buf << '\n';
    }
  }
  write_text(path, out.str());
}

std::string render_svg(const std::vector<Panel>& panels) {
  std::ostringstream svg;
  const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << kPanelHeight
      << "\" viewBox=\"0 0 " << width << " " << kPanelHeight << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) render_panel(svg, panels[i], kPanelWidth * static_cast<double>(i));
  svg << "</svg>\n";
  return svg.str();
}

PlotFiles write_plots(const eval::EvalReport* noise, const eval::EvalReport* partial,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  PlotFiles files;
  auto emit_csv = [&](const std::vector<Series>& s, const std::string& name) {
    write_series_csv(s, dir / name);
    files.written.push_back(dir / name);
  };
  auto emit_svg = [&](const std::vector<Panel>& p, const std::string& name) {
    write_text(dir / name, render_svg(p));
    files.written.push_back(dir / name);
  };
  if (noise) {
    auto s = collect_series(*noise, Metric::kTrackingError);
    emit_csv(s, "error_vs_sigma.csv");
    emit_svg({{"Tracking error vs noise level", "sigma_v", "mean Euclidean error", s}}, "error_vs_sigma.svg");
  }
  if (partial) {
    auto s = collect_series(*partial, Metric::kTrackingError);
    emit_csv(s, "error_vs_proportion.csv");
    emit_svg({{"Tracking error vs observed proportion", "P", "mean Euclidean error", s}}, "error_vs_proportion.svg");

    std::vector<Panel> panels;
    for (auto [metric, title] : {std::pair{Metric::kLikelihood, "Expected log-likelihood"},
                                 std::pair{Metric::kKl, "KL to prior"}, std::pair{Metric::kElbo, "ELBO"}}) {
      auto m = collect_series(*partial, metric);
      emit_csv(m, "elbo_" + to_string(metric) + "_vs_proportion.csv");
      panels.push_back({title, "P", "nats per step", m});
    }
    emit_svg(panels, "elbo_vs_proportion.svg");
  }
  return files;
}

}  // namespace dvsmc::cli
