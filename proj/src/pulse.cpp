#include "photon_limits/pulse.hpp"

#include "photon_limits/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace photon_limits {

void ObservationWindow::validate() const {
  if (!(std::isfinite(t_min) && std::isfinite(t_max) && t_max > t_min))
    throw DomainError("observation window requires t_max > t_min");
}

TimeGrid TimeGrid::over(const ObservationWindow& window, double dt) {
  window.validate();
  if (!(dt > 0.0)) throw DomainError("temporal grid spacing must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(window.length() / dt));
  if (steps < 2) throw DomainError("temporal grid needs at least three points");
  return TimeGrid{window.t_min, dt, steps + 1};
}

TabulatedPulse::TabulatedPulse(std::span<const double> t_grid, std::span<const double> s_values) {
  if (t_grid.size() != s_values.size()) throw DomainError("pulse table: column length mismatch");
  if (t_grid.size() < 3) throw DomainError("pulse table needs at least three samples");
  const double dt = (t_grid.back() - t_grid.front()) / static_cast<double>(t_grid.size() - 1);
  if (!(dt > 0.0)) throw DomainError("pulse table: grid must be strictly ascending");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double step = t_grid[k] - t_grid[k - 1];
    if (!(step > 0.0)) throw DomainError("pulse table: grid must be strictly ascending");
    if (std::abs(step - dt) > 1e-6 * dt) throw DomainError("pulse table: grid spacing must be uniform");
  }
  grid_ = TimeGrid{t_grid.front(), dt, t_grid.size()};
  values_.assign(s_values.begin(), s_values.end());
  finish();
}

TabulatedPulse::TabulatedPulse(TimeGrid grid, std::vector<double> s_values)
    : grid_(grid), values_(std::move(s_values)) {
  if (values_.size() != grid_.size || values_.size() < 3) throw DomainError("pulse table: size mismatch");
  if (!(grid_.dt > 0.0)) throw DomainError("pulse table: grid must be strictly ascending");
  finish();
}

void TabulatedPulse::finish() {
  double mass = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    if (!std::isfinite(v) || v < 0.0) throw DomainError("pulse table: values must be finite and nonnegative");
    const double w = (k == 0 || k + 1 == values_.size()) ? 0.5 : 1.0;
    mass += w * v;
  }
  mass *= grid_.dt;
  if (!(mass > 0.0)) throw DomainError("pulse table: zero mass");
  if (std::abs(mass - 1.0) > 1e-6) {
    renormalized_ = true;
    for (double& v : values_) v /= mass;
  }
  const std::size_t n = values_.size();
  derivatives_.resize(n);
  derivatives_[0] = (values_[1] - values_[0]) / grid_.dt;
  derivatives_[n - 1] = (values_[n - 1] - values_[n - 2]) / grid_.dt;
  for (std::size_t k = 1; k + 1 < n; ++k)
    derivatives_[k] = (values_[k + 1] - values_[k - 1]) / (2.0 * grid_.dt);
}

namespace {

double interpolate(const TimeGrid& grid, std::span<const double> table, double t) {
  const double pos = (t - grid.t0) / grid.dt;
  const double last = static_cast<double>(grid.size - 1);
  if (pos <= 0.0) return table.front();
  if (pos >= last) return table.back();
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return table[i] + w * (table[i + 1] - table[i]);
}

}  // namespace

double TabulatedPulse::value(double t) const {
  if (t < grid_.t0 || t > grid_.back()) return 0.0;
  return interpolate(grid_, values_, t);
}

double TabulatedPulse::derivative(double t) const {
  const double slack = 1e-9 * grid_.dt;
  if (t < grid_.t0 - slack || t > grid_.back() + slack)
    throw DomainError("pulse derivative requested outside the tabulated grid");
  return interpolate(grid_, derivatives_, t);
}

double TabulatedPulse::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) m += grid_.at(k) * values_[k];
  return m * grid_.dt;
}

double TabulatedPulse::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double d = grid_.at(k) - mu;
    v += d * d * values_[k];
  }
  return v * grid_.dt;
}

void FluxModel::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("flux model: alpha must be >= 0");
  if (!(lambda_b >= 0.0) || !std::isfinite(lambda_b)) throw DomainError("flux model: lambda_b must be >= 0");
  if (const auto* g = std::get_if<GaussianPulse>(&pulse); g && !(g->sigma_t > 0.0))
    throw DomainError("flux model: Gaussian sigma_t must be > 0");
  if (pileup) {
    if (!(pileup->beta >= 0.0)) throw DomainError("flux model: pile-up beta must be >= 0");
    if (!(pileup->gamma > 0.0)) throw DomainError("flux model: pile-up gamma must be > 0");
  }
  if (dark) {
    if (!(dark->lambda_dark >= 0.0)) throw DomainError("flux model: dark count must be >= 0");
    if (dark->n_pixels == 0) throw DomainError("flux model: dark count needs n_pixels >= 1");
  }
}

double FluxModel::sigma_t() const {
  if (const auto* g = std::get_if<GaussianPulse>(&pulse)) return g->sigma_t;
  throw UnsupportedModel("sigma_t is only defined for Gaussian pulses");
}

double FluxModel::constant_floor() const {
  double f = lambda_b;
  if (dark) f += dark->lambda_dark / static_cast<double>(dark->n_pixels);
  return f;
}

double FluxModel::floor(double t) const {
  double f = constant_floor();
  if (pileup && t >= 0.0) f += pileup->beta * pileup->gamma * std::exp(-pileup->gamma * t);
  return f;
}

FluxModel FluxModel::per_pixel(std::size_t n) const {
  const double share = 1.0 / static_cast<double>(n);
  FluxModel out = *this;
  out.alpha *= share;
  out.lambda_b *= share;
  if (out.pileup) out.pileup->beta *= share;
  if (out.dark) out.dark->n_pixels = n;
  return out;
}

double pulse_value(const PulseShape& shape, double t) {
  if (const auto* g = std::get_if<GaussianPulse>(&shape)) {
    const double s = g->sigma_t;
    return std::exp(-0.5 * t * t / (s * s)) / (std::sqrt(2.0 * std::numbers::pi) * s);
  }
  return std::get<TabulatedPulse>(shape).value(t);
}

double pulse_derivative(const PulseShape& shape, double t) {
  if (const auto* g = std::get_if<GaussianPulse>(&shape)) {
    const double s = g->sigma_t;
    return -t / (s * s) * pulse_value(shape, t);
  }
  return std::get<TabulatedPulse>(shape).derivative(t);
}

double pulse_width(const PulseShape& shape) {
  if (const auto* g = std::get_if<GaussianPulse>(&shape)) return g->sigma_t;
  return std::sqrt(std::get<TabulatedPulse>(shape).variance());
}

double eval_flux(const FluxModel& model, double tau, double t) {
  return model.alpha * pulse_value(model.pulse, t - tau) + model.floor(t);
}

double pileup_mass(const PileUp& pileup, const ObservationWindow& window) {
  if (window.t_max <= 0.0) return 0.0;
  const double lo = std::max(window.t_min, 0.0);
  return pileup.beta * (std::exp(-pileup.gamma * lo) - std::exp(-pileup.gamma * window.t_max));
}

double pulse_energy(const FluxModel& model, const ObservationWindow& window) {
  window.validate();
  double q = model.alpha + window.length() * model.constant_floor();
  if (model.pileup) q += pileup_mass(*model.pileup, window);
  return q;
}

TabulatedPulse read_tabulated_pulse(std::istream& in) {
  std::vector<double> t;
  std::vector<double> s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    double a = 0.0;
    double b = 0.0;
    std::string extra;
    if (!(row >> a >> b) || (row >> extra))
      throw ParseError("pulse table line " + std::to_string(line_no) + ": expected `t s(t)`");
    t.push_back(a);
    s.push_back(b);
  }
  return TabulatedPulse(t, s);
}

TabulatedPulse load_tabulated_pulse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pulse file: " + path);
  return read_tabulated_pulse(in);
}

}  // namespace photon_limits
