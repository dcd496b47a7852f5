#include "photon_limits/sampler.hpp"

#include "photon_limits/errors.hpp"
#include "photon_limits/scene.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace photon_limits {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void append_uniform(std::vector<double>& out, std::size_t count, const ObservationWindow& w, RngStream& rng) {
  for (std::size_t i = 0; i < count; ++i) out.push_back(w.t_min + w.length() * rng.uniform());
}

// Exponential(gamma) on [max(t_min, 0), t_max]; the lower cut is exact by
// memorylessness, the upper one by rejection.
void append_pileup(std::vector<double>& out, std::size_t count, const PileUp& p, const ObservationWindow& w,
                   RngStream& rng) {
  const double lo = std::max(w.t_min, 0.0);
  std::exponential_distribution<double> exp(p.gamma);
  for (std::size_t i = 0; i < count; ++i) {
    double t = lo + exp(rng.engine());
    while (t > w.t_max) t = lo + exp(rng.engine());
    out.push_back(t);
  }
}

std::size_t pileup_count(const FluxModel& model, const ObservationWindow& w, RngStream& rng) {
  if (!model.pileup) return 0;
  if (!(model.pileup->gamma > 0.0)) throw DomainError("pile-up gamma must be > 0");
  if (w.t_max <= 0.0) return 0;
  return draw_count(pileup_mass(*model.pileup, w), rng);
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix(seed);
  for (auto k : keys) h = splitmix(h ^ splitmix(k + 0x632be59bd9b4e019ULL));
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
    : engine_(stream_key(seed, keys)) {}

std::size_t draw_count(double rate, RngStream& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("Poisson rate must be finite and >= 0");
  if (rate == 0.0) return 0;
  return static_cast<std::size_t>(std::poisson_distribution<long long>(rate)(rng.engine()));
}

TimeStamps sample_gaussian(const FluxModel& model, double tau, const ObservationWindow& window, RngStream& rng,
                           bool strict_window) {
  if (!model.gaussian()) throw UnsupportedModel("sample_gaussian needs a Gaussian pulse; use sample_inverse_cdf");
  if (model.pileup && model.pileup->beta > 0.0) throw UnsupportedModel("pile-up models go through sample_pileup");
  window.validate();
  const double sigma = model.sigma_t();
  TimeStamps out;
  out.tracked = true;
  out.counts.signal = draw_count(model.alpha, rng);
  out.counts.background = draw_count(window.length() * model.constant_floor(), rng);
  out.times.reserve(out.counts.signal + out.counts.background);
  for (std::size_t i = 0; i < out.counts.signal; ++i) {
    double t = tau + sigma * rng.normal();
    while (strict_window && !window.contains(t)) t = tau + sigma * rng.normal();
    out.times.push_back(t);
  }
  append_uniform(out.times, out.counts.background, window, rng);
  std::sort(out.times.begin(), out.times.end());
  return out;
}

InverseCdfTable::InverseCdfTable(const TimeGrid& grid, std::span<const double> flux) : grid_(grid) {
  if (flux.size() != grid.size || grid.size < 2) throw DomainError("inverse CDF: flux does not match the grid");
  cdf_.resize(flux.size());
  cdf_[0] = 0.0;
  for (std::size_t k = 0; k < flux.size(); ++k) {
    if (!std::isfinite(flux[k]) || flux[k] < 0.0) throw DomainError("inverse CDF: flux must be finite and >= 0");
    if (k > 0) cdf_[k] = cdf_[k - 1] + 0.5 * grid.dt * (flux[k - 1] + flux[k]);
  }
}

double InverseCdfTable::invert(double u) const {
  const double target = u * mass();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
  if (k == cdf_.size()) k = cdf_.size() - 1;
  if (k > 0 && target - cdf_[k - 1] < cdf_[k] - target) --k;
  return grid_.at(k);
}

TimeStamps sample_inverse_cdf(const InverseCdfTable& table, RngStream& rng) {
  TimeStamps out;
  if (!(table.mass() > 0.0)) return out;
  const std::size_t m = draw_count(table.mass(), rng);
  out.times.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.times.push_back(table.invert(rng.uniform()));
  std::sort(out.times.begin(), out.times.end());
  return out;
}

TimeStamps sample_inverse_cdf(const TimeGrid& grid, std::span<const double> flux, RngStream& rng) {
  return sample_inverse_cdf(InverseCdfTable(grid, flux), rng);
}

TimeStamps sample_pileup(const FluxModel& model, double tau, const ObservationWindow& window, RngStream& rng) {
  if (!model.pileup) throw ConfigError("sample_pileup needs pile-up parameters");
  window.validate();
  TimeStamps out;
  out.tracked = true;
  out.counts.signal = draw_count(model.alpha, rng);
  out.counts.pileup = pileup_count(model, window, rng);
  out.counts.background = draw_count(window.length() * model.constant_floor(), rng);
  out.times.reserve(out.counts.signal + out.counts.pileup + out.counts.background);
  if (model.gaussian()) {
    const double sigma = model.sigma_t();
    for (std::size_t i = 0; i < out.counts.signal; ++i) out.times.push_back(tau + sigma * rng.normal());
  } else {
    const auto& tab = std::get<TabulatedPulse>(model.pulse);
    const InverseCdfTable table(tab.grid(), tab.values());
    for (std::size_t i = 0; i < out.counts.signal; ++i) out.times.push_back(tau + table.invert(rng.uniform()));
  }
  append_pileup(out.times, out.counts.pileup, *model.pileup, window, rng);
  append_uniform(out.times, out.counts.background, window, rng);
  std::sort(out.times.begin(), out.times.end());
  return out;
}

TimeStamps sample_components(const EffectivePulse& pulse, const InverseCdfTable& signal_table,
                             const ObservationWindow& window, RngStream& rng, double shift) {
  const FluxModel& model = pulse.pixel_model;
  TimeStamps out;
  out.tracked = true;
  out.counts.signal = signal_table.mass() > 0.0 ? draw_count(signal_table.mass(), rng) : 0;
  out.counts.pileup = pileup_count(model, window, rng);
  out.counts.background = draw_count(window.length() * model.constant_floor(), rng);
  out.times.reserve(out.counts.signal + out.counts.pileup + out.counts.background);
  for (std::size_t i = 0; i < out.counts.signal; ++i) out.times.push_back(shift + signal_table.invert(rng.uniform()));
  if (model.pileup) append_pileup(out.times, out.counts.pileup, *model.pileup, window, rng);
  append_uniform(out.times, out.counts.background, window, rng);
  std::sort(out.times.begin(), out.times.end());
  return out;
}

void write_stamp_dump(std::ostream& out, std::uint64_t seed, std::size_t n_pixels, std::size_t trial,
                      std::span<const TimeStamps> pixels) {
  out << "# seed=" << seed << " N=" << n_pixels << " trial=" << trial << '\n';
  const auto old = out.precision(17);
  for (std::size_t p = 0; p < pixels.size(); ++p)
    for (double t : pixels[p].times) out << p << ' ' << t << '\n';
  out.precision(old);
}

StampDump read_stamp_dump(std::istream& in) {
  StampDump d;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (header) continue;
      std::istringstream h(line.substr(first + 1));
      std::string tok;
      bool seen_n = false;
      while (h >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        try {
          if (key == "seed") d.seed = std::stoull(val);
          if (key == "N") {
            d.n_pixels = std::stoull(val);
            seen_n = true;
          }
          if (key == "trial") d.trial = std::stoull(val);
        } catch (const std::exception&) {
          throw ParseError("stamp dump: malformed header value '" + tok + "'");
        }
      }
      if (!seen_n || d.n_pixels == 0) throw ParseError("stamp dump: header must give N >= 1");
      d.pixels.resize(d.n_pixels);
      header = true;
      continue;
    }
    if (!header) throw ParseError("stamp dump: missing `# seed=... N=... trial=...` header");
    std::istringstream row(line);
    long long p = -1;
    double t = 0.0;
    std::string extra;
    if (!(row >> p >> t) || (row >> extra))
      throw ParseError("stamp dump line " + std::to_string(line_no) + ": expected `pixel_index t`");
    if (p < 0 || static_cast<std::size_t>(p) >= d.n_pixels)
      throw ParseError("stamp dump line " + std::to_string(line_no) + ": pixel index out of range");
    d.pixels[static_cast<std::size_t>(p)].times.push_back(t);
  }
  if (!header) throw ParseError("stamp dump: empty input");
  for (auto& px : d.pixels) std::sort(px.times.begin(), px.times.end());
  return d;
}

}  // namespace photon_limits
