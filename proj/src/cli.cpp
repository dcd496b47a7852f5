#include "photon_limits/cli.hpp"

#include "photon_limits/config.hpp"
#include "photon_limits/errors.hpp"
#include "photon_limits/experiment.hpp"
#include "photon_limits/report.hpp"
#include "photon_limits/sampler.hpp"
#include "photon_limits/spaddata.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace photon_limits {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> solver;
  std::string out;
  std::string svg;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config file (key = value)");
  cmd->add_option("--seed", f.seed, "Override the config seed");
  cmd->add_option("--trials", f.trials, "Override trials per N");
  cmd->add_option("--solver", f.solver, "gradient, search or zero");
  cmd->add_option("--out", f.out, "Output file (stdout when omitted)");
  cmd->add_option("--svg", f.svg, "Also write an SVG chart here");
}

ExperimentConfig load(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.solver) cfg.solver = parse_solver(*f.solver);
  return cfg;
}

// Writes through `fn` to the --out file or to `out`. Returns the stream the
// summary line should go to.
template <class Fn>
std::ostream& emit(const CommonFlags& f, std::ostream& out, std::ostream& err, Fn fn) {
  if (f.out.empty()) {
    fn(out);
    return err;
  }
  std::ofstream file(f.out);
  if (!file) throw std::runtime_error("cannot write " + f.out);
  fn(file);
  return out;
}

void emit_svg(const CommonFlags& f, const std::string& title, std::span<const SweepCurve> curves) {
  if (f.svg.empty()) return;
  std::ofstream file(f.svg);
  if (!file) throw std::runtime_error("cannot write " + f.svg);
  write_sweep_svg(file, title, curves);
}

void summarize(std::ostream& os, const SweepCurve& c) {
  if (c.simulated.empty()) return;
  std::size_t best = 0;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < c.simulated.size(); ++i) {
    if (c.simulated[i].mse < c.simulated[best].mse) best = i;
    worst_gap = std::max(worst_gap, std::abs(c.simulated[i].mse - c.theory[i].total) / c.theory[i].total);
  }
  os << c.label << ": minimizing N=" << c.theory[best].n << " mse_sim=" << format_number(c.simulated[best].mse)
     << " mse_theory=" << format_number(c.theory[best].total) << " max_rel_gap=" << format_number(worst_gap)
     << '\n';
}

void warn(const ExperimentConfig& cfg, std::ostream& err) {
  for (const auto& w : cfg.validate()) err << "warning: " << w << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Resolution versus photon-noise simulator for single-photon LiDAR arrays", "photon-limits"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* sweep1d = app.add_subcommand("sweep1d", "1D MSE versus N sweep");
  auto* ablation = app.add_subcommand("ablation", "1D sweep with full and simplified theory");
  auto* sweep2d = app.add_subcommand("sweep2d", "2D MSE versus N sweep on a depth map");
  auto* pileup = app.add_subcommand("pileup", "1D sweep with the pile-up background");
  auto* floor = app.add_subcommand("floor-sweep", "1D sweeps over the noise floor values");
  auto* sample = app.add_subcommand("sample", "Dump photon stamps for one trial");
  auto* estimate_cmd = app.add_subcommand("estimate", "ML delay estimates from a stamp dump");
  auto* preprocess = app.add_subcommand("preprocess", "Outlier rejection on a timestamp cube");
  auto* bootstrap = app.add_subcommand("bootstrap", "Binned bootstrap MSE curve of a timestamp cube");
  auto* units = app.add_subcommand("units", "Physical to normalized unit conversion");
  auto* theory = app.add_subcommand("theory", "Predicted bias, variance and MSE");
  for (auto* c : {sweep1d, ablation, sweep2d, pileup, floor, sample, estimate_cmd, preprocess, bootstrap, theory})
    add_common(c, f);

  std::size_t n_opt = 0;
  std::size_t trial = 0;
  sample->add_option("--n", n_opt, "Pixel count")->required();
  sample->add_option("--trial", trial, "Trial index");
  std::string stamps_path;
  estimate_cmd->add_option("--stamps", stamps_path, "Stamp dump from `sample`")->required();
  theory->add_option("--n", n_opt, "Single pixel count (default: the config n_list)");

  std::string cube_path;
  std::string raw_out;
  bool synthetic = false;
  double sigma_guess = 0.0;
  for (auto* c : {preprocess, bootstrap}) {
    c->add_option("--cube", cube_path, "Timestamp cube (`# H W frames tdc_resolution`, then `y x t`)");
    c->add_flag("--synthetic", synthetic, "Use a generated fan-scene cube instead of --cube");
    c->add_option("--raw-out", raw_out, "Write the raw (generated) cube here");
    c->add_option("--sigma-t", sigma_guess, "Pulse width guess (default: config sigma_t)");
  }

  PhysicalSetup phys;
  units->add_option("--array-mm", phys.array_mm, "Array width in mm");
  units->add_option("--grid", phys.grid_points, "Spatial grid points");
  units->add_option("--group", phys.group, "Grid cells per pixel");
  units->add_option("--window-ns", phys.window_ns, "Observation window in ns");
  units->add_option("--time-points", phys.time_points, "Temporal grid points");
  units->add_option("--sigma-points", phys.sigma_t_points, "Pulse sigma in temporal grid points");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (sweep1d->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto r = run_1d_sweep(cfg);
      auto& os = emit(f, out, err, [&](std::ostream& s) { write_sweep_csv(s, r.curve); });
      emit_svg(f, "MSE vs N (1D)", std::span(&r.curve, 1));
      summarize(os, r.curve);
      if (r.empty_pixels) os << "note: " << r.empty_pixels << " pixel estimates had no stamps\n";
    } else if (ablation->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto r = run_ablation(cfg);
      auto& os = emit(f, out, err, [&](std::ostream& s) {
        write_sweep_csv(s, r.full);
        s << '\n';
        write_sweep_csv(s, r.simplified);
      });
      const SweepCurve both[] = {r.full, r.simplified};
      emit_svg(f, "Ablation: with and without c^2 sigma_x^2", both);
      summarize(os, r.full);
      summarize(os, r.simplified);
    } else if (sweep2d->parsed()) {
      auto cfg = load(f);
      if (cfg.scene != "file" && cfg.scene != "smooth2d") cfg.scene = "smooth2d";
      warn(cfg, err);
      const auto r = run_2d_sweep(cfg, cfg.profile());
      auto& os = emit(f, out, err, [&](std::ostream& s) { write_sweep_csv(s, r.curve); });
      emit_svg(f, "MSE vs N (2D)", std::span(&r.curve, 1));
      summarize(os, r.curve);
    } else if (pileup->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto r = run_pileup(cfg);
      auto& os = emit(f, out, err, [&](std::ostream& s) { write_sweep_csv(s, r.curve); });
      emit_svg(f, "MSE vs N with pile-up", std::span(&r.curve, 1));
      summarize(os, r.curve);
    } else if (floor->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto results = run_noise_floor_sweep(cfg);
      std::vector<SweepCurve> curves;
      for (const auto& [lb, r] : results) curves.push_back(r.curve);
      auto& os = emit(f, out, err, [&](std::ostream& s) {
        for (std::size_t i = 0; i < results.size(); ++i) {
          if (i) s << '\n';
          s << "# lambda_b=" << format_number(results[i].first) << '\n';
          write_sweep_csv(s, curves[i]);
        }
      });
      emit_svg(f, "MSE vs N for several noise floors", curves);
      for (const auto& c : curves) summarize(os, c);
    } else if (sample->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto truth = cfg.profile();
      const auto model = cfg.flux_model();
      if (truth.is_2d()) throw ConfigError("sample works on 1D scenes");
      if (n_opt == 0 || n_opt > truth.cols()) throw ConfigError("--n must lie in [1, grid resolution]");
      std::vector<TimeStamps> pixels(n_opt);
      for (std::size_t n = 0; n < n_opt; ++n) {
        const auto pulse = effective_pulse_exact(truth, model, n_opt, n, cfg.window(), cfg.dt);
        const InverseCdfTable table(pulse.grid, pulse.signal);
        RngStream rng(cfg.seed, {n_opt, trial, n});
        pixels[n] = sample_components(pulse, table, cfg.window(), rng);
      }
      std::size_t total = 0;
      for (const auto& p : pixels) total += p.size();
      auto& os = emit(f, out, err, [&](std::ostream& s) { write_stamp_dump(s, cfg.seed, n_opt, trial, pixels); });
      os << "sampled " << total << " stamps over " << n_opt << " pixels\n";
    } else if (estimate_cmd->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      std::ifstream in(stamps_path);
      if (!in) throw ParseError("cannot open stamp dump: " + stamps_path);
      const auto dump = read_stamp_dump(in);
      const auto truth = cfg.profile();
      const auto model = cfg.flux_model();
      if (truth.is_2d()) throw ConfigError("estimate works on 1D scenes");
      const std::size_t n_pixels = dump.n_pixels;
      if (n_pixels > truth.cols()) throw ConfigError("dump N exceeds the scene grid resolution");
      if (cfg.likelihood == LikelihoodKind::gaussian && !model.gaussian())
        throw ConfigError("likelihood = gaussian needs a Gaussian pulse");
      const auto binned = bin_scene(truth, model, n_pixels);
      std::vector<double> est(n_pixels);
      std::ostringstream rows;
      for (std::size_t n = 0; n < n_pixels; ++n) {
        const auto pulse = effective_pulse_exact(truth, model, n_pixels, n, cfg.window(), cfg.dt);
        std::vector<double> times = dump.pixels[n].times;
        LikelihoodContext ctx =
            cfg.likelihood == LikelihoodKind::gaussian
                ? LikelihoodContext::gaussian(pulse.pixel_model.alpha, binned.sigma_n[n], pulse.pixel_model,
                                              std::move(times), cfg.window(), cfg.dt)
                : LikelihoodContext::tabulated(pulse, std::move(times), cfg.window());
        if (cfg.init == InitKind::oracle) ctx.set_initial(binned.tau[n]);
        const auto e = estimate(ctx, cfg.solver);
        est[n] = e.tau_hat;
        rows << n << ',' << format_number(e.tau_hat) << ',' << format_number(binned.tau[n]) << ','
             << dump.pixels[n].size() << ',' << (e.converged ? 1 : 0) << '\n';
      }
      const double mse = PixelPartition(truth, n_pixels).mse(est);
      auto& os = emit(f, out, err, [&](std::ostream& s) { s << "pixel,tau_hat,tau_n,stamps,converged\n" << rows.str(); });
      os << "estimated " << n_pixels << " pixels with the " << solver_name(cfg.solver)
         << " solver, mse=" << format_number(mse) << '\n';
    } else if (preprocess->parsed() || bootstrap->parsed()) {
      const auto cfg = load(f);
      const double sigma = sigma_guess > 0.0 ? sigma_guess : cfg.sigma_t;
      TimestampCube raw;
      if (synthetic) {
        SyntheticCubeSpec spec;
        spec.sigma_t = sigma;
        spec.seed = cfg.seed;
        spec.secondary_fraction = 0.2;
        spec.spike_fraction = 0.05;
        raw = make_synthetic_cube(spec).cube;
      } else {
        if (cube_path.empty()) throw ConfigError("--cube or --synthetic is required");
        raw = load_cube(cube_path);
      }
      if (!raw_out.empty()) save_cube(raw_out, raw);
      OutlierOptions oo;
      oo.coarse_window = cfg.coarse_window;
      const auto clean = reject_outliers(raw, sigma, oo);
      if (preprocess->parsed()) {
        auto& os = emit(f, out, err, [&](std::ostream& s) { write_cube(s, clean); });
        const auto st = estimate_sigma_t(clean);
        os << "retained " << clean.total() << " of " << raw.total() << " stamps; sigma_t=" << format_number(st.mean)
           << " alpha0=" << format_number(estimate_alpha0(clean, cfg.draws))
           << " coverage=" << format_number(pseudo_ground_truth(clean).coverage()) << '\n';
      } else {
        BootstrapOptions bo;
        bo.bins = cfg.bins;
        bo.draws = cfg.draws;
        bo.resamples = cfg.resamples;
        bo.seed = cfg.seed;
        const auto rows = binned_bootstrap_mse(clean, pseudo_ground_truth(clean), bo);
        auto& os = emit(f, out, err, [&](std::ostream& s) { write_bootstrap_csv(s, rows); });
        const auto best = std::min_element(rows.begin(), rows.end(),
                                           [](const auto& a, const auto& b) { return a.mse_sim < b.mse_sim; });
        os << "bootstrap: minimizing b=" << best->b << " (N=" << best->n_effective
           << ") mse_sim=" << format_number(best->mse_sim) << '\n';
      }
    } else if (units->parsed()) {
      const auto u = convert_units(phys);
      out << "dx = " << format_number(u.dx_unit) << " unit = " << format_number(u.dx_um) << " um\n"
          << "sigma_x = " << format_number(u.sigma_x_unit) << " unit = " << format_number(u.sigma_x_cells)
          << " pixels = " << format_number(u.sigma_x_um) << " um\n"
          << "dt = " << format_number(u.dt_unit) << " unit = " << format_number(u.dt_ns) << " ns\n"
          << "sigma_t = " << format_number(u.sigma_t_unit) << " unit = " << format_number(u.sigma_t_ns) << " ns\n"
          << "pulse width (6 sigma_t) = " << format_number(u.pulse_width_ns) << " ns\n";
    } else if (theory->parsed()) {
      const auto cfg = load(f);
      warn(cfg, err);
      const auto truth = cfg.profile();
      const auto model = cfg.flux_model();
      std::vector<std::size_t> ns = n_opt ? std::vector<std::size_t>{n_opt} : cfg.n_list;
      std::ostringstream text;
      for (std::size_t n : ns) {
        MsePrediction p;
        if (truth.is_2d()) {
          p = mse_2d(gradient(truth).aggregate, cfg.sigma_t, cfg.alpha0, n);
        } else if (!model.gaussian() || model.constant_floor() > 0.0 || model.pileup) {
          p = mse_numerical(truth, model, n, cfg.window(), cfg.dt);
        } else {
          p = mse_1d(bin_scene(truth, model, n).c_sq, cfg.sigma_t, cfg.alpha0, n);
        }
        text << "N=" << n << " bias=" << format_number(p.bias) << " variance=" << format_number(p.variance)
             << " total=" << format_number(p.total) << " mode=" << mode_name(p.mode) << '\n';
      }
      if (truth.is_2d()) {
        text << "optimal N (2D) = "
             << format_number(optimal_n_2d(cfg.alpha0, std::sqrt(gradient(truth).aggregate), cfg.sigma_t)) << '\n';
      } else if (model.gaussian()) {
        const double c_sq = bin_scene(truth, model, ns.back()).c_sq;
        text << "optimal N (1D, c^2 at N=" << ns.back() << ") = " << format_number(optimal_n_1d(c_sq, cfg.sigma_t, cfg.alpha0))
             << '\n';
      }
      emit(f, out, err, [&](std::ostream& s) { s << text.str(); });
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace photon_limits
