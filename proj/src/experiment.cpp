#include "photon_limits/experiment.hpp"

#include "photon_limits/errors.hpp"
#include "photon_limits/estimator.hpp"
#include "photon_limits/parallel.hpp"
#include "photon_limits/report.hpp"
#include "photon_limits/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace photon_limits {

double empirical_mse(const ToaProfile& reconstruction, const ToaProfile& truth) {
  if (reconstruction.rows() != truth.rows() || reconstruction.cols() != truth.cols())
    throw DomainError("empirical MSE: grids differ");
  double acc = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = reconstruction[k] - truth[k];
    acc += d * d;
  }
  return acc / static_cast<double>(truth.size());
}

PixelPartition::PixelPartition(const ToaProfile& truth, std::size_t n) {
  if (n == 0) throw ConfigError("pixel count must be >= 1");
  const auto v = truth.values();
  total_ = static_cast<double>(v.size());
  auto add = [&](std::size_t k) {
    sum_.back() += v[k];
    sum_sq_.back() += v[k] * v[k];
    count_.back() += 1.0;
  };
  auto open = [&] {
    count_.push_back(0.0);
    sum_.push_back(0.0);
    sum_sq_.push_back(0.0);
  };
  if (!truth.is_2d()) {
    if (n > truth.cols()) throw ConfigError("pixel count exceeds the grid resolution");
    for (std::size_t p = 0; p < n; ++p) {
      open();
      const auto [lo, hi] = pixel_cells(truth.cols(), n, p);
      for (std::size_t k = lo; k < hi; ++k) add(k);
    }
    return;
  }
  if (n > truth.rows() || n > truth.cols()) throw ConfigError("pixel count exceeds the grid resolution");
  for (std::size_t m = 0; m < n; ++m) {
    const auto [r0, r1] = pixel_cells(truth.rows(), n, m);
    for (std::size_t p = 0; p < n; ++p) {
      open();
      const auto [c0, c1] = pixel_cells(truth.cols(), n, p);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) add(r * truth.cols() + c);
    }
  }
}

double PixelPartition::pixel_error(std::size_t p, double a) const {
  // sum_k (a - tau_k)^2 expanded; clamp tiny negative rounding.
  return std::max(count_[p] * a * a - 2.0 * a * sum_[p] + sum_sq_[p], 0.0) / total_;
}

double PixelPartition::mse(std::span<const double> estimates) const {
  if (estimates.size() != count_.size()) throw DomainError("reconstruction has the wrong number of pixels");
  double acc = 0.0;
  for (std::size_t p = 0; p < count_.size(); ++p) acc += pixel_error(p, estimates[p]);
  return acc;
}

Decomposition decompose_empirical(std::span<const TrialRecord> trials, const ToaProfile& truth, std::size_t n) {
  Decomposition d;
  if (trials.empty()) return d;
  const PixelPartition part(truth, n);
  const double r = static_cast<double>(trials.size());
  for (std::size_t p = 0; p < part.pixels(); ++p) {
    double mean = 0.0;
    for (const auto& t : trials) mean += t.estimates.at(p);
    mean /= r;
    double var = 0.0;
    for (const auto& t : trials) var += (t.estimates[p] - mean) * (t.estimates[p] - mean);
    d.bias += part.pixel_error(p, mean);
    d.variance += part.weight(p) * var / r;
  }
  for (const auto& t : trials) d.mse += t.mse;
  d.mse /= r;
  d.gap = d.mse > 0.0 ? std::abs(d.bias + d.variance - d.mse) / d.mse : 0.0;
  return d;
}

namespace {

void check_pixel_counts(const ExperimentConfig& cfg, const ToaProfile& truth) {
  for (std::size_t n : cfg.n_list) {
    if (n > truth.cols() || (truth.is_2d() && n > truth.rows()))
      throw ConfigError("N = " + std::to_string(n) + " exceeds the scene grid resolution");
  }
}

SimulatedPoint summarize(std::vector<TrialRecord>& records, const ToaProfile& truth, std::size_t n,
                         SweepResult& result) {
  const auto d = decompose_empirical(records, truth, n);
  SimulatedPoint pt{d.mse, d.bias, d.variance, records.size(), 0};
  for (const auto& r : records) {
    pt.empty_pixels += r.empty_pixels;
    result.fallbacks += r.fallbacks;
  }
  result.empty_pixels += pt.empty_pixels;
  return pt;
}

bool needs_numerical_theory(const FluxModel& m) {
  return !m.gaussian() || m.constant_floor() > 0.0 || (m.pileup && m.pileup->beta > 0.0);
}

}  // namespace

SweepResult simulate_1d(const ExperimentConfig& cfg, const ToaProfile& truth, const FluxModel& model,
                        const SweepSettings& settings) {
  cfg.validate();
  if (truth.is_2d()) throw ConfigError("1D sweeps need a 1D scene");
  if (settings.likelihood == LikelihoodKind::gaussian && !model.gaussian())
    throw ConfigError("likelihood = gaussian needs a Gaussian pulse; use likelihood = exact");
  check_pixel_counts(cfg, truth);
  const ObservationWindow window = cfg.window();

  SweepResult result;
  result.curve.seed = cfg.seed;
  for (std::size_t n_pixels : cfg.n_list) {
    const BinnedScene binned = bin_scene(truth, model, n_pixels);
    std::vector<EffectivePulse> pulses(n_pixels);
    parallel_for(n_pixels, [&](std::size_t n) {
      pulses[n] = effective_pulse_exact(truth, model, n_pixels, n, window, cfg.dt);
    });
    std::vector<InverseCdfTable> tables;
    tables.reserve(n_pixels);
    for (const auto& p : pulses) tables.emplace_back(p.grid, p.signal);
    const PixelPartition part(truth, n_pixels);

    std::vector<TrialRecord> records(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t trial) {
      TrialRecord& rec = records[trial];
      rec.n = n_pixels;
      rec.trial = trial;
      rec.estimates.resize(n_pixels);
      for (std::size_t n = 0; n < n_pixels; ++n) {
        RngStream rng(cfg.seed, {n_pixels, trial, n});
        TimeStamps stamps = sample_components(pulses[n], tables[n], window, rng);
        const bool empty = stamps.empty();
        LikelihoodContext ctx =
            settings.likelihood == LikelihoodKind::gaussian
                ? LikelihoodContext::gaussian(pulses[n].pixel_model.alpha, binned.sigma_n[n], pulses[n].pixel_model,
                                              std::move(stamps.times), window, cfg.dt)
                : LikelihoodContext::tabulated(pulses[n], std::move(stamps.times), window);
        if (settings.init == InitKind::oracle) ctx.set_initial(binned.tau[n]);
        const MlEstimate e = estimate(ctx, settings.solver);
        rec.estimates[n] = e.tau_hat;
        if (empty) ++rec.empty_pixels;
        if (e.fell_back) ++rec.fallbacks;
      }
      rec.mse = part.mse(rec.estimates);
    });

    result.curve.simulated.push_back(summarize(records, truth, n_pixels, result));
    if (settings.theory == TheoryKind::closed_form) {
      result.curve.theory.push_back(mse_1d(binned.c_sq, model.sigma_t(), model.alpha, n_pixels));
    } else {
      result.curve.theory.push_back(mse_numerical(truth, model, n_pixels, window, cfg.dt));
    }
    if (settings.keep_trials) result.trials.push_back(std::move(records));
  }
  result.curve.validate();
  return result;
}

SweepResult run_1d_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const FluxModel model = cfg.flux_model();
  SweepSettings s;
  s.likelihood = cfg.likelihood;
  s.init = cfg.init;
  s.solver = cfg.solver;
  s.theory = needs_numerical_theory(model) ? TheoryKind::numerical : TheoryKind::closed_form;
  auto r = simulate_1d(cfg, cfg.profile(), model, s);
  r.curve.label = "sweep1d";
  return r;
}

AblationResult run_ablation(const ExperimentConfig& cfg) {
  const FluxModel model = cfg.flux_model();
  if (!model.gaussian()) throw UnsupportedModel("the ablation compares closed forms and needs a Gaussian pulse");
  const ToaProfile truth = cfg.profile();
  AblationResult out;
  out.full = run_1d_sweep(cfg).curve;
  out.full.label = "full";
  out.simplified = out.full;
  out.simplified.label = "simplified";
  for (auto& p : out.simplified.theory) {
    const BinnedScene b = bin_scene(truth, model, p.n);
    p = mse_1d_simplified(b.c_sq, model.sigma_t(), model.alpha, p.n);
  }
  return out;
}

SweepResult run_2d_sweep(const ExperimentConfig& cfg, const ToaProfile& depth_map) {
  cfg.validate();
  if (!depth_map.is_2d()) throw ConfigError("2D sweeps need a 2D depth map");
  check_pixel_counts(cfg, depth_map);
  const FluxModel model = cfg.flux_model();
  if (!model.gaussian()) throw UnsupportedModel("2D sweeps support Gaussian pulses only");
  const ObservationWindow window = cfg.window();
  const double c_norm_sq = gradient(depth_map).aggregate;
  const double sigma_t = model.sigma_t();
  const auto values = depth_map.values();
  const std::size_t cols = depth_map.cols();

  SweepResult result;
  result.curve.label = "sweep2d";
  result.curve.seed = cfg.seed;
  for (std::size_t n_side : cfg.n_list) {
    const BinnedScene2D binned = bin_scene_2d(depth_map, model, n_side, n_side);
    const FluxModel pixel = model.per_pixel(n_side * n_side);
    const bool fast = pixel.constant_floor() == 0.0 && !(pixel.pileup && pixel.pileup->beta > 0.0);
    const PixelPartition part(depth_map, n_side);
    const std::size_t count = n_side * n_side;

    std::vector<TrialRecord> records(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t trial) {
      TrialRecord& rec = records[trial];
      rec.n = n_side;
      rec.trial = trial;
      rec.estimates.resize(count);
      for (std::size_t m = 0; m < n_side; ++m) {
        const auto [r0, r1] = pixel_cells(depth_map.rows(), n_side, m);
        for (std::size_t n = 0; n < n_side; ++n) {
          const auto [c0, c1] = pixel_cells(cols, n_side, n);
          const std::size_t p = m * n_side + n;
          RngStream rng(cfg.seed, {n_side, trial, p});
          std::uniform_int_distribution<std::size_t> row(r0, r1 - 1);
          std::uniform_int_distribution<std::size_t> col(c0, c1 - 1);
          const std::size_t signal = draw_count(pixel.alpha, rng);
          if (fast) {
            if (signal == 0) {
              rec.estimates[p] = binned.tau[p];
              ++rec.empty_pixels;
              continue;
            }
            // Mean of the stamps: the pulse jitter of M draws sums to
            // sigma_t * sqrt(M) * Z.
            double s = 0.0;
            for (std::size_t i = 0; i < signal; ++i) s += values[row(rng.engine()) * cols + col(rng.engine())];
            s += sigma_t * std::sqrt(static_cast<double>(signal)) * rng.normal();
            rec.estimates[p] = s / static_cast<double>(signal);
            continue;
          }
          std::vector<double> times;
          times.reserve(signal);
          for (std::size_t i = 0; i < signal; ++i)
            times.push_back(values[row(rng.engine()) * cols + col(rng.engine())] + sigma_t * rng.normal());
          const std::size_t bg = draw_count(window.length() * pixel.constant_floor(), rng);
          for (std::size_t i = 0; i < bg; ++i) times.push_back(window.t_min + window.length() * rng.uniform());
          std::sort(times.begin(), times.end());
          if (times.empty()) ++rec.empty_pixels;
          LikelihoodContext ctx =
              LikelihoodContext::gaussian(pixel.alpha, binned.sigma_n[p], pixel, std::move(times), window, cfg.dt);
          if (cfg.init == InitKind::oracle) ctx.set_initial(binned.tau[p]);
          const MlEstimate e = estimate(ctx, cfg.solver);
          rec.estimates[p] = e.tau_hat;
          if (e.fell_back) ++rec.fallbacks;
        }
      }
      rec.mse = part.mse(rec.estimates);
    });
    result.curve.simulated.push_back(summarize(records, depth_map, n_side, result));
    result.curve.theory.push_back(mse_2d(c_norm_sq, sigma_t, model.alpha, n_side));
  }
  result.curve.validate();
  return result;
}

SweepResult run_pileup(const ExperimentConfig& cfg) {
  cfg.validate();
  const FluxModel model = cfg.flux_model();
  if (!model.pileup) throw ConfigError("pile-up sweep needs beta > 0");
  SweepSettings s;
  s.likelihood = LikelihoodKind::exact;
  s.init = InitKind::oracle;
  s.solver = cfg.solver;
  s.theory = TheoryKind::numerical;
  auto r = simulate_1d(cfg, cfg.profile(), model, s);
  r.curve.label = "pileup";
  return r;
}

std::vector<std::pair<double, SweepResult>> run_noise_floor_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.floor_sweep.empty()) throw ConfigError("floor_sweep must list at least one value");
  std::vector<std::pair<double, SweepResult>> out;
  const ToaProfile truth = cfg.profile();
  for (double lb : cfg.floor_sweep) {
    ExperimentConfig c = cfg;
    c.lambda_b = lb;
    SweepSettings s;
    s.likelihood = LikelihoodKind::exact;
    s.init = InitKind::oracle;
    s.solver = cfg.solver;
    s.theory = TheoryKind::numerical;
    auto r = simulate_1d(c, truth, c.flux_model(), s);
    r.curve.label = "lambda_b=" + format_number(lb);
    out.emplace_back(lb, std::move(r));
  }
  return out;
}

UnitConversion convert_units(const PhysicalSetup& s) {
  if (!(s.array_mm > 0.0) || s.grid_points == 0 || s.group == 0 || !(s.window_ns > 0.0) || s.time_points == 0)
    throw ConfigError("unit conversion needs positive sizes");
  if (s.group > s.grid_points) throw ConfigError("group size exceeds the grid");
  UnitConversion u;
  const double grid = static_cast<double>(s.grid_points);
  const double group = static_cast<double>(s.group);
  u.dx_unit = 1.0 / grid;
  u.dx_um = s.array_mm * 1000.0 / grid;
  u.sigma_x_unit = group / (grid * std::sqrt(12.0));
  u.sigma_x_cells = group / std::sqrt(12.0);
  u.sigma_x_um = u.sigma_x_cells * u.dx_um;
  u.dt_unit = 1.0 / static_cast<double>(s.time_points);
  u.dt_ns = s.window_ns / static_cast<double>(s.time_points);
  u.sigma_t_unit = s.sigma_t_points * u.dt_unit;
  u.sigma_t_ns = s.sigma_t_points * u.dt_ns;
  u.pulse_width_ns = 6.0 * u.sigma_t_ns;
  return u;
}

}  // namespace photon_limits
