#include "photon_limits/spaddata.hpp"

#include "photon_limits/errors.hpp"
#include "photon_limits/parallel.hpp"
#include "photon_limits/report.hpp"
#include "photon_limits/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace photon_limits {

TimestampCube TimestampCube::empty(std::size_t height, std::size_t width, std::size_t frames, double tdc_resolution) {
  if (height == 0 || width == 0) throw DomainError("cube needs at least one pixel");
  if (!(tdc_resolution > 0.0)) throw DomainError("TDC resolution must be > 0");
  TimestampCube c;
  c.height = height;
  c.width = width;
  c.frames = frames;
  c.tdc_resolution = tdc_resolution;
  c.stamps.resize(height * width);
  return c;
}

std::size_t TimestampCube::total() const {
  std::size_t n = 0;
  for (const auto& s : stamps) n += s.size();
  return n;
}

TimestampCube read_cube(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  TimestampCube cube;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (!header) {
      if (line[first] != '#') throw ParseError("cube: missing `# H W frames tdc_resolution` header");
      std::istringstream h(line.substr(first + 1));
      std::size_t height = 0, width = 0, frames = 0;
      double res = 0.0;
      if (!(h >> height >> width >> frames >> res)) throw ParseError("cube: malformed header");
      try {
        cube = TimestampCube::empty(height, width, frames, res);
      } catch (const DomainError& e) {
        throw ParseError(std::string("cube header: ") + e.what());
      }
      header = true;
      continue;
    }
    if (line[first] == '#') continue;
    std::istringstream row(line);
    long long y = -1, x = -1;
    double t = 0.0;
    std::string extra;
    if (!(row >> y >> x >> t) || (row >> extra))
      throw ParseError("cube line " + std::to_string(line_no) + ": expected `y x t`");
    if (y < 0 || x < 0 || static_cast<std::size_t>(y) >= cube.height || static_cast<std::size_t>(x) >= cube.width)
      throw ParseError("cube line " + std::to_string(line_no) + ": pixel index out of range");
    if (!std::isfinite(t)) throw ParseError("cube line " + std::to_string(line_no) + ": non-finite stamp");
    cube.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)).push_back(t);
  }
  if (!header) throw ParseError("cube: empty file");
  return cube;
}

TimestampCube load_cube(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cube: " + path);
  return read_cube(in);
}

void write_cube(std::ostream& out, const TimestampCube& cube) {
  out << "# " << cube.height << ' ' << cube.width << ' ' << cube.frames << ' '
      << format_number(cube.tdc_resolution) << '\n';
  for (std::size_t y = 0; y < cube.height; ++y)
    for (std::size_t x = 0; x < cube.width; ++x)
      for (double t : cube.at(y, x)) out << y << ' ' << x << ' ' << format_number(t) << '\n';
}

void save_cube(const std::string& path, const TimestampCube& cube) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write cube: " + path);
  write_cube(out, cube);
}

namespace {

// Peak of the Gaussian-smoothed histogram of `stamps` restricted to [lo, hi].
// Bins are aligned to multiples of the TDC resolution so the result does not
// depend on the window placement.
double smoothed_peak(std::span<const double> stamps, double lo, double hi, double res, double smoothing_bins) {
  const auto b0 = static_cast<long long>(std::floor(lo / res));
  const auto b1 = static_cast<long long>(std::floor(hi / res));
  std::vector<double> hist(static_cast<std::size_t>(b1 - b0 + 1), 0.0);
  for (double t : stamps) {
    if (t < lo || t > hi) continue;
    const auto b = static_cast<long long>(std::floor(t / res));
    if (b >= b0 && b <= b1) hist[static_cast<std::size_t>(b - b0)] += 1.0;
  }
  const auto radius = static_cast<long long>(std::ceil(4.0 * smoothing_bins));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long long i = -radius; i <= radius; ++i)
    kernel[static_cast<std::size_t>(i + radius)] =
        smoothing_bins > 0.0 ? std::exp(-0.5 * static_cast<double>(i * i) / (smoothing_bins * smoothing_bins))
                             : (i == 0 ? 1.0 : 0.0);
  const auto n = static_cast<long long>(hist.size());
  long long best = 0;
  double best_v = -1.0;
  for (long long k = 0; k < n; ++k) {
    double v = 0.0;
    for (long long i = -radius; i <= radius; ++i) {
      const long long j = k + i;
      if (j >= 0 && j < n) v += kernel[static_cast<std::size_t>(i + radius)] * hist[static_cast<std::size_t>(j)];
    }
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return (static_cast<double>(b0 + best) + 0.5) * res;
}

std::vector<double> clean_pixel(const std::vector<double>& stamps, double sigma, double res,
                                const OutlierOptions& opt) {
  if (stamps.empty()) return {};
  // Coarse centre: start from the pixel mean with a window spanning every
  // stamp, then halve the window down to the coarse width, re-centring on the
  // mean of the stamps inside it at each width.
  double centre = std::accumulate(stamps.begin(), stamps.end(), 0.0) / static_cast<double>(stamps.size());
  const auto [first, last] = std::minmax_element(stamps.begin(), stamps.end());
  const double target = 0.5 * opt.coarse_window * sigma;
  double half = std::max(target, std::max(centre - *first, *last - centre));
  std::vector<double> current;
  while (true) {
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> inside;
      for (double t : stamps)
        if (std::abs(t - centre) <= half) inside.push_back(t);
      if (inside.empty()) break;
      current = std::move(inside);
      const double next = std::accumulate(current.begin(), current.end(), 0.0) / static_cast<double>(current.size());
      if (std::abs(next - centre) <= 0.5 * res) break;
      centre = next;
    }
    if (half <= target) break;
    half = std::max(target, 0.5 * half);
  }
  current.clear();
  for (double t : stamps)
    if (std::abs(t - centre) <= target) current.push_back(t);
  if (current.empty()) current = stamps;
  while (true) {
    const auto [lo, hi] = std::minmax_element(current.begin(), current.end());
    const double peak = smoothed_peak(current, *lo, *hi, res, opt.smoothing_bins);
    std::vector<double> next;
    next.reserve(current.size());
    for (double t : current)
      if (std::abs(t - peak) <= opt.keep * sigma) next.push_back(t);
    if (next.size() == current.size() || next.empty()) return next;
    current = std::move(next);
  }
}

}  // namespace

TimestampCube reject_outliers(const TimestampCube& cube, double sigma_t_guess, const OutlierOptions& opt) {
  if (!(sigma_t_guess > 0.0)) throw DomainError("outlier rejection needs sigma_t > 0");
  TimestampCube out = TimestampCube::empty(cube.height, cube.width, cube.frames, cube.tdc_resolution);
  parallel_for(cube.pixels(), [&](std::size_t p) {
    out.stamps[p] = clean_pixel(cube.stamps[p], sigma_t_guess, cube.tdc_resolution, opt);
  });
  return out;
}

double PseudoGroundTruth::coverage() const {
  if (valid.empty()) return 0.0;
  return static_cast<double>(std::count(valid.begin(), valid.end(), true)) / static_cast<double>(valid.size());
}

PseudoGroundTruth pseudo_ground_truth(const TimestampCube& clean) {
  PseudoGroundTruth g;
  g.height = clean.height;
  g.width = clean.width;
  g.tau.assign(clean.pixels(), std::numeric_limits<double>::quiet_NaN());
  g.counts.assign(clean.pixels(), 0);
  g.valid.assign(clean.pixels(), false);
  for (std::size_t p = 0; p < clean.pixels(); ++p) {
    const auto& s = clean.stamps[p];
    g.counts[p] = s.size();
    if (s.empty()) continue;
    g.tau[p] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    g.valid[p] = true;
  }
  return g;
}

SigmaTEstimate estimate_sigma_t(const TimestampCube& clean) {
  SigmaTEstimate e;
  e.map.assign(clean.pixels(), std::numeric_limits<double>::quiet_NaN());
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t p = 0; p < clean.pixels(); ++p) {
    const auto& s = clean.stamps[p];
    if (s.size() < 2) continue;
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double ss = 0.0;
    for (double t : s) ss += (t - m) * (t - m);
    e.map[p] = std::sqrt(ss / static_cast<double>(s.size() - 1));
    acc += e.map[p];
    ++used;
  }
  e.mean = used ? acc / static_cast<double>(used) : 0.0;
  return e;
}

double estimate_alpha0(const TimestampCube& clean, std::size_t k) {
  if (clean.frames == 0) throw DomainError("alpha0 estimate needs a nonzero frame count");
  return static_cast<double>(clean.total()) / static_cast<double>(clean.frames) * static_cast<double>(k);
}

std::vector<BootstrapRow> binned_bootstrap_mse(const TimestampCube& clean, const PseudoGroundTruth& truth,
                                               const BootstrapOptions& opt) {
  if (truth.height != clean.height || truth.width != clean.width)
    throw DomainError("bootstrap: pseudo ground truth does not match the cube");
  if (opt.draws == 0) throw ConfigError("bootstrap draws must be >= 1");
  if (opt.resamples < 2) throw ConfigError("bootstrap needs at least two resamples");
  const std::size_t valid = static_cast<std::size_t>(std::count(truth.valid.begin(), truth.valid.end(), true));
  if (valid == 0) throw DomainError("bootstrap: no pixel has retained stamps");
  const double sigma_t = opt.sigma_t > 0.0 ? opt.sigma_t : estimate_sigma_t(clean).mean;
  const double alpha0 = opt.alpha0 > 0.0 ? opt.alpha0 : static_cast<double>(opt.draws * valid);
  const std::size_t H = clean.height;
  const std::size_t W = clean.width;

  std::vector<BootstrapRow> rows;
  for (std::size_t b : opt.bins) {
    if (b == 0 || b > std::max(H, W)) throw ConfigError("bootstrap block size out of range");
    const std::size_t by = (H + b - 1) / b;
    const std::size_t bx = (W + b - 1) / b;
    const std::size_t blocks = by * bx;
    // pixels of each block
    std::vector<std::vector<std::size_t>> members(blocks);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        if (truth.valid[y * W + x]) members[(y / b) * bx + x / b].push_back(y * W + x);

    BootstrapRow row;
    row.b = b;
    row.n_effective = std::max(by, bx);
    row.resamples = opt.resamples;
    row.coverage = truth.coverage();
    for (const auto& m : members) {
      if (m.empty()) continue;
      double avg = 0.0;
      for (auto p : m) avg += truth.tau[p];
      avg /= static_cast<double>(m.size());
      for (auto p : m) row.bias_numerical += (avg - truth.tau[p]) * (avg - truth.tau[p]);
    }
    row.bias_numerical /= static_cast<double>(valid);

    // estimates[r][block]
    std::vector<std::vector<double>> est(opt.resamples, std::vector<double>(blocks, 0.0));
    parallel_for(opt.resamples, [&](std::size_t r) {
      for (std::size_t k = 0; k < blocks; ++k) {
        const auto& m = members[k];
        if (m.empty()) continue;
        RngStream rng(opt.seed, {b, r, k});
        double s = 0.0;
        for (auto p : m) {
          const auto& st = clean.stamps[p];
          std::uniform_int_distribution<std::size_t> pick(0, st.size() - 1);
          for (std::size_t d = 0; d < opt.draws; ++d) s += st[pick(rng.engine())];
        }
        est[r][k] = s / static_cast<double>(m.size() * opt.draws);
      }
    });
    const double rr = static_cast<double>(opt.resamples);
    for (std::size_t k = 0; k < blocks; ++k) {
      const auto& m = members[k];
      if (m.empty()) continue;
      double mean = 0.0;
      for (std::size_t r = 0; r < opt.resamples; ++r) mean += est[r][k];
      mean /= rr;
      double var = 0.0;
      for (std::size_t r = 0; r < opt.resamples; ++r) var += (est[r][k] - mean) * (est[r][k] - mean);
      var /= rr;
      for (auto p : m) {
        double mse = 0.0;
        for (std::size_t r = 0; r < opt.resamples; ++r) mse += (est[r][k] - truth.tau[p]) * (est[r][k] - truth.tau[p]);
        row.mse_sim += mse / rr;
        row.bias_sim += (mean - truth.tau[p]) * (mean - truth.tau[p]);
        row.variance_sim += var;
      }
    }
    row.mse_sim /= static_cast<double>(valid);
    row.bias_sim /= static_cast<double>(valid);
    row.variance_sim /= static_cast<double>(valid);
    const double n_super = static_cast<double>(blocks);  // N^2 in the 2D formula
    row.mse_theory = row.bias_numerical + sigma_t * sigma_t * n_super / alpha0;
    rows.push_back(row);
  }
  return rows;
}

void write_bootstrap_csv(std::ostream& out, std::span<const BootstrapRow> rows) {
  out << "b,N_effective,mse_sim,mse_theory,resamples\n";
  for (const auto& r : rows)
    out << r.b << ',' << r.n_effective << ',' << format_number(r.mse_sim) << ',' << format_number(r.mse_theory) << ','
        << r.resamples << '\n';
}

SyntheticCube make_synthetic_cube(const SyntheticCubeSpec& s) {
  SyntheticCube out;
  out.cube = TimestampCube::empty(s.height, s.width, s.frames, s.tdc_resolution);
  out.tau.resize(s.height * s.width);
  const double res = s.tdc_resolution;
  auto quantize = [&](double t) {
    t = std::clamp(t, 0.0, s.t_max - 0.5 * res);
    return (std::floor(t / res) + 0.5) * res;
  };
  const double signal_mean = static_cast<double>(s.frames) * s.detection_rate;
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(s.width) - 0.5;
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(s.height) - 0.5;
      const double r = std::hypot(u, v);
      const double theta = std::atan2(v, u);
      const bool blade = r < 0.35 && std::cos(static_cast<double>(s.blades) * theta) > 0.0;
      const double tau = blade ? s.tau_fan : s.tau_background;
      const std::size_t p = y * s.width + x;
      out.tau[p] = tau;
      RngStream rng(s.seed, {0xc0be, p});
      auto& st = out.cube.stamps[p];
      const std::size_t m = draw_count(signal_mean, rng);
      for (std::size_t i = 0; i < m; ++i) st.push_back(quantize(tau + s.sigma_t * rng.normal()));
      const std::size_t m2 = draw_count(signal_mean * s.secondary_fraction, rng);
      for (std::size_t i = 0; i < m2; ++i) st.push_back(quantize(tau + 10.0 * s.sigma_t + s.sigma_t * rng.normal()));
      const std::size_t ms = draw_count(signal_mean * s.spike_fraction, rng);
      for (std::size_t i = 0; i < ms; ++i) st.push_back(quantize(2.0 * res * rng.uniform()));
      const std::size_t me = draw_count(signal_mean * s.spike_fraction, rng);
      for (std::size_t i = 0; i < me; ++i) st.push_back(quantize(s.t_max - 2.0 * res * rng.uniform()));
      const std::size_t mb = draw_count(static_cast<double>(s.frames) * s.ambient_rate, rng);
      for (std::size_t i = 0; i < mb; ++i) st.push_back(quantize(s.t_max * rng.uniform()));
      std::sort(st.begin(), st.end());
    }
  }
  return out;
}

}  // namespace photon_limits
