#pragma once

// Flat `key = value` experiment configuration. Blank lines and '#' comments
// are ignored; unknown keys are errors. Numbers may be written as fractions
// (`dx = 1/2048`), lists as comma-separated values.

#include "photon_limits/estimator.hpp"
#include "photon_limits/pulse.hpp"
#include "photon_limits/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace photon_limits {

enum class LikelihoodKind { gaussian, exact };
enum class InitKind { mean, oracle };

struct ExperimentConfig {
  double dx = 1.0 / 2048.0;
  double dt = 1.0 / 256.0;
  double t_min = 0.0;
  double t_max = 10.0;
  double sigma_t = 0.5;
  double alpha0 = 1e4;
  double lambda_b = 0.0;
  std::vector<std::size_t> n_list{8, 16, 32, 64, 128, 256};
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  Solver solver = Solver::zero;
  std::string scene = "sigmoid";  // sigmoid | ramp | flat | smooth2d | file
  std::string pulse = "gaussian";  // gaussian | path to a two-column table
  double beta = 0.0;
  double gamma = 4.0;
  double lambda_dark = 0.0;
  std::vector<double> floor_sweep{0.0, 10.0, 30.0};
  LikelihoodKind likelihood = LikelihoodKind::gaussian;
  InitKind init = InitKind::mean;
  std::string depth_map;
  double blur_sigma = 2.0;
  std::size_t grid2d = 512;
  // real-data pipeline
  std::vector<std::size_t> bins{1, 2, 4, 8, 16};
  std::size_t draws = 3;
  std::size_t resamples = 100;
  double coarse_window = 20.0;  // in units of sigma_t

  ObservationWindow window() const { return {t_min, t_max}; }
  // Throws ConfigError on inconsistent values. Returns warnings.
  std::vector<std::string> validate() const;
  FluxModel flux_model() const;
  ToaProfile profile() const;
};

// Applies one `key = value` assignment. Throws ConfigError for unknown keys or
// malformed values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig read_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace photon_limits
