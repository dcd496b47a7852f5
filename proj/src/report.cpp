#include "photon_limits/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace photon_limits {

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

void write_sweep_csv(std::ostream& out, const SweepCurve& curve) {
  curve.validate();
  out << "N,bias_theory,var_theory,mse_theory,mse_sim,bias_sim,var_sim,trials,seed\n";
  for (std::size_t i = 0; i < curve.theory.size(); ++i) {
    const auto& t = curve.theory[i];
    out << t.n << ',' << format_number(t.bias) << ',' << format_number(t.variance) << ','
        << format_number(t.total) << ',';
    if (curve.simulated.empty()) {
      out << ",,,0,";
    } else {
      const auto& s = curve.simulated[i];
      out << format_number(s.mse) << ',' << format_number(s.bias) << ',' << format_number(s.variance) << ','
          << s.trials << ',';
    }
    out << curve.seed << '\n';
  }
}

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace

void write_svg_chart(std::ostream& out, const std::string& title, std::span<const ChartSeries> series) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      x0 = std::min(x0, std::log10(s.x[i]));
      x1 = std::max(x1, std::log10(s.x[i]));
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(y0)); e <= static_cast<int>(std::floor(y1)); ++e)
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(std::pow(10.0, e)) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << e << "</text>\n";
  if (!series.empty())
    for (double x : series.front().x)
      out << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << format_number(x)
          << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (s.dashed) out << " stroke-dasharray=\"6,4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0.0 && s.y[i] > 0.0) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    out << "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
        << "/>\n";
    out << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_sweep_svg(std::ostream& out, const std::string& title, std::span<const SweepCurve> curves) {
  std::vector<ChartSeries> series;
  for (const auto& c : curves) {
    ChartSeries th{c.label + " theory", {}, {}, true};
    ChartSeries sim{c.label + " simulation", {}, {}, false};
    for (std::size_t i = 0; i < c.theory.size(); ++i) {
      th.x.push_back(static_cast<double>(c.theory[i].n));
      th.y.push_back(c.theory[i].total);
      if (!c.simulated.empty()) {
        sim.x.push_back(static_cast<double>(c.theory[i].n));
        sim.y.push_back(c.simulated[i].mse);
      }
    }
    series.push_back(std::move(th));
    if (!sim.x.empty()) series.push_back(std::move(sim));
  }
  write_svg_chart(out, title, series);
}

}  // namespace photon_limits
