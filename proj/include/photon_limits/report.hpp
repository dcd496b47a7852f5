#pragma once

// CSV and minimal SVG output for sweep curves.

#include "photon_limits/theory.hpp"

#include <iosfwd>
#include <span>
#include <string>

namespace photon_limits {

// `N,bias_theory,var_theory,mse_theory,mse_sim,bias_sim,var_sim,trials,seed`
// Simulated columns are empty when the curve has no simulation.
void write_sweep_csv(std::ostream& out, const SweepCurve& curve);

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

// Log-log line chart.
void write_svg_chart(std::ostream& out, const std::string& title, std::span<const ChartSeries> series);
// Theory (dashed) and simulation (solid) for each curve.
void write_sweep_svg(std::ostream& out, const std::string& title, std::span<const SweepCurve> curves);

// Shortest round-trip formatting used by every writer.
std::string format_number(double v);

}  // namespace photon_limits
