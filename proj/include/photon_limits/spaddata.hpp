#pragma once

// Timestamp cubes from a SPAD array: loading, outlier rejection, pseudo ground
// truth, sensor parameter estimates and the binned bootstrap MSE curve.
//
// Cube text format:
//   # H W frames tdc_resolution
//   y x t        (one line per stamp)

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace photon_limits {

struct TimestampCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 0;
  double tdc_resolution = 1.0;
  std::vector<std::vector<double>> stamps;  // row-major, one list per pixel

  static TimestampCube empty(std::size_t height, std::size_t width, std::size_t frames, double tdc_resolution);
  std::vector<double>& at(std::size_t y, std::size_t x) { return stamps[y * width + x]; }
  const std::vector<double>& at(std::size_t y, std::size_t x) const { return stamps[y * width + x]; }
  std::size_t pixels() const { return stamps.size(); }
  std::size_t total() const;
};

TimestampCube read_cube(std::istream& in);
TimestampCube load_cube(const std::string& path);
void write_cube(std::ostream& out, const TimestampCube& cube);
void save_cube(const std::string& path, const TimestampCube& cube);

struct OutlierOptions {
  double coarse_window = 20.0;  // full width of the first-stage window, in sigma_t
  double smoothing_bins = 2.0;  // Gaussian smoothing of the histogram, in TDC bins
  double keep = 3.0;            // half width of the retained band, in sigma_t
};

// Coarse centre (pixel mean), then the peak of the smoothed histogram inside
// the coarse window, then stamps within +-keep sigma_t of the peak. The peak
// pick and the cut are repeated until nothing more is removed, which makes the
// operation idempotent.
TimestampCube reject_outliers(const TimestampCube& cube, double sigma_t_guess, const OutlierOptions& opt = {});

struct PseudoGroundTruth {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> tau;  // per-pixel mean; NaN where missing
  std::vector<std::size_t> counts;
  std::vector<bool> valid;

  double coverage() const;
};

PseudoGroundTruth pseudo_ground_truth(const TimestampCube& clean);

struct SigmaTEstimate {
  std::vector<double> map;  // per-pixel spread; NaN where fewer than two stamps
  double mean = 0.0;
};

SigmaTEstimate estimate_sigma_t(const TimestampCube& clean);

// (retained stamps / frames) * k summed over pixels.
double estimate_alpha0(const TimestampCube& clean, std::size_t k);

struct BootstrapOptions {
  std::vector<std::size_t> bins{1, 2, 4, 8, 16};
  std::size_t draws = 3;  // K stamps per pixel per resample
  std::size_t resamples = 100;
  std::uint64_t seed = 1;
  double sigma_t = 0.0;  // 0: use estimate_sigma_t
  double alpha0 = 0.0;   // 0: draws * valid pixels, the flux the resampling sees
};

struct BootstrapRow {
  std::size_t b = 0;
  std::size_t n_effective = 0;  // super-pixels along the longer side
  double mse_sim = 0.0;
  double mse_theory = 0.0;
  double bias_sim = 0.0;
  double variance_sim = 0.0;
  double bias_numerical = 0.0;  // binned vs full-resolution pseudo ground truth
  std::size_t resamples = 0;
  double coverage = 0.0;
};

// For each block size b: draw K stamps with replacement from every valid
// pixel of each b x b block, take the pooled mean, and compare against the
// full-resolution pseudo ground truth. Theory: bias_numerical + sigma_t^2 N^2 / alpha0.
std::vector<BootstrapRow> binned_bootstrap_mse(const TimestampCube& clean, const PseudoGroundTruth& truth,
                                               const BootstrapOptions& opt);

// `b,N_effective,mse_sim,mse_theory,resamples`
void write_bootstrap_csv(std::ostream& out, std::span<const BootstrapRow> rows);

// Fan of blades over a flat background, optional secondary return at
// +10 sigma_t and spikes at both ends of the TDC range.
struct SyntheticCubeSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t frames = 1000;
  double detection_rate = 0.1;  // signal photons per frame
  double tdc_resolution = 0.125;  // sigma_t spans 4 bins, close to the real sensor
  double t_max = 100.0;
  double sigma_t = 0.5;
  double tau_background = 60.0;
  double tau_fan = 40.0;
  std::size_t blades = 6;
  double secondary_fraction = 0.0;  // relative to the signal count
  double spike_fraction = 0.0;      // per end, relative to the signal count
  double ambient_rate = 0.0;        // uniform photons per frame
  std::uint64_t seed = 1;
};

struct SyntheticCube {
  TimestampCube cube;
  std::vector<double> tau;  // true delay per pixel
};

SyntheticCube make_synthetic_cube(const SyntheticCubeSpec& spec);

}  // namespace photon_limits
