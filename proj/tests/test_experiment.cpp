#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "photon_limits/errors.hpp"
#include "photon_limits/experiment.hpp"
#include "photon_limits/report.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace photon_limits;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_list = {8, 32};
  cfg.trials = 24;
  cfg.seed = 7;
  return cfg;
}

std::string csv(const SweepCurve& c) {
  std::ostringstream s;
  write_sweep_csv(s, c);
  return s.str();
}

}  // namespace

TEST_CASE("empirical MSE examples") {
  const auto truth = make_sigmoid_profile(1.0 / 1024);
  CHECK(empirical_mse(truth, truth) == 0.0);
  std::vector<double> shifted(truth.values().begin(), truth.values().end());
  for (auto& v : shifted) v += 0.3;
  CHECK(empirical_mse(ToaProfile::line(shifted), truth) == doctest::Approx(0.09));

  const auto ramp = make_ramp_profile(1.0 / 4096, 1.0);
  for (std::size_t n : {4u, 16u}) {
    std::vector<double> mids;
    for (std::size_t p = 0; p < n; ++p) mids.push_back((p + 0.5) / n);
    const auto rec = piecewise_reconstruction(mids, 4096);
    CHECK(empirical_mse(rec, ramp) == doctest::Approx(1.0 / (12.0 * n * n)).epsilon(1e-5));
  }
  CHECK_THROWS_AS(empirical_mse(make_flat_profile(1.0 / 64, 1.0), truth), DomainError);
}

TEST_CASE("pixel partition equals the explicit reconstruction integral") {
  const auto truth = make_sigmoid_profile(1.0 / 2048);
  RngStream rng(1);
  for (std::size_t n : {1u, 7u, 64u, 256u}) {
    const PixelPartition part(truth, n);
    std::vector<double> est(n);
    for (auto& e : est) e = 4.0 + 4.0 * rng.uniform();
    const double direct = empirical_mse(piecewise_reconstruction(est, truth.size()), truth);
    CHECK(part.mse(est) == doctest::Approx(direct).epsilon(1e-10));
    double w = 0.0;
    for (std::size_t p = 0; p < n; ++p) w += part.weight(p);
    CHECK(w == doctest::Approx(1.0));
  }
}

TEST_CASE("bias/variance decomposition") {
  const auto truth = make_ramp_profile(1.0 / 1024, 1.0);
  const std::size_t n = 8;
  const auto b = bin_scene(truth, FluxModel{}, n);
  SUBCASE("deterministic estimates have no variance") {
    std::vector<TrialRecord> trials(5);
    for (auto& t : trials) {
      t.n = n;
      t.estimates = b.tau;
      t.mse = PixelPartition(truth, n).mse(t.estimates);
    }
    const auto d = decompose_empirical(trials, truth, n);
    CHECK(d.variance == doctest::Approx(0.0));
    CHECK(d.bias == doctest::Approx(1.0 / (12.0 * 64.0)).epsilon(1e-4));
  }
  SUBCASE("flat scene with exact pixel values has no bias") {
    const auto flat = make_flat_profile(1.0 / 1024, 5.0);
    RngStream rng(2);
    std::vector<TrialRecord> trials(200);
    for (auto& t : trials) {
      t.n = n;
      for (std::size_t p = 0; p < n; ++p) t.estimates.push_back(5.0 + 0.1 * rng.normal());
      t.mse = empirical_mse(piecewise_reconstruction(t.estimates, flat.size()), flat);
    }
    // the mean reconstruction is 5 + O(0.1 / sqrt(200)), hence bias ~ 5e-5
    const auto d = decompose_empirical(trials, flat, n);
    CHECK(d.bias < 2e-4);
    CHECK(d.variance == doctest::Approx(0.01).epsilon(0.1));
    CHECK(d.gap < 1e-9);
  }
}

TEST_CASE("sigmoid sweep: decomposition adds up and theory is close") {
  auto cfg = small_config();
  cfg.trials = 200;
  SweepSettings s;
  s.keep_trials = true;
  const auto truth = cfg.profile();
  const auto r = simulate_1d(cfg, truth, cfg.flux_model(), s);
  REQUIRE(r.curve.simulated.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& sim = r.curve.simulated[i];
    const auto& th = r.curve.theory[i];
    CHECK(std::abs(sim.bias + sim.variance - sim.mse) / sim.mse <= 0.03);
    CHECK(std::abs(sim.mse - th.total) / th.total <= 0.2);
    const auto d = decompose_empirical(r.trials[i], truth, cfg.n_list[i]);
    CHECK(d.mse == doctest::Approx(sim.mse));
  }
}

TEST_CASE("sweeps are reproducible and independent of the worker count") {
  const auto cfg = small_config();
  setenv("PHOTON_LIMITS_THREADS", "1", 1);
  const auto a = csv(run_1d_sweep(cfg).curve);
  setenv("PHOTON_LIMITS_THREADS", "3", 1);
  const auto b = csv(run_1d_sweep(cfg).curve);
  unsetenv("PHOTON_LIMITS_THREADS");
  CHECK(a == b);
  auto other = cfg;
  other.seed = 8;
  CHECK(csv(run_1d_sweep(other).curve) != a);
}

TEST_CASE("sweep CSV layout") {
  const auto r = run_1d_sweep(small_config());
  std::istringstream in(csv(r.curve));
  std::string line;
  std::getline(in, line);
  CHECK(line == "N,bias_theory,var_theory,mse_theory,mse_sim,bias_sim,var_sim,trials,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  CHECK(rows == 2);
  std::ostringstream svg;
  write_sweep_svg(svg, "test", std::span(&r.curve, 1));
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("2D sweep, small") {
  ExperimentConfig cfg;
  cfg.scene = "smooth2d";
  cfg.grid2d = 128;
  cfg.alpha0 = 1e6;
  cfg.n_list = {8, 16};
  cfg.trials = 40;
  const auto r = run_2d_sweep(cfg, cfg.profile());
  REQUIRE(r.curve.simulated.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.curve.simulated[i].bias == doctest::Approx(r.curve.theory[i].bias).epsilon(0.15));
    CHECK(r.curve.simulated[i].variance == doctest::Approx(r.curve.theory[i].variance).epsilon(0.2));
  }
  CHECK_THROWS_AS(run_2d_sweep(cfg, make_sigmoid_profile(1.0 / 64)), ConfigError);
}

TEST_CASE("configuration file") {
  std::istringstream in(
      "# comment\n"
      "dx = 1/1024\n"
      "alpha0 = 2e4   # trailing comment\n"
      "n_list = 4, 8, 16\n"
      "solver = search\n"
      "likelihood = exact\n"
      "init = oracle\n");
  const auto cfg = read_config(in);
  CHECK(cfg.dx == doctest::Approx(1.0 / 1024));
  CHECK(cfg.alpha0 == 2e4);
  CHECK(cfg.n_list == std::vector<std::size_t>{4, 8, 16});
  CHECK(cfg.solver == Solver::search);
  CHECK(cfg.likelihood == LikelihoodKind::exact);
  CHECK(cfg.init == InitKind::oracle);

  std::stringstream round;
  write_config(round, cfg);
  const auto back = read_config(round);
  CHECK(back.dx == cfg.dx);
  CHECK(back.n_list == cfg.n_list);
  CHECK(back.floor_sweep == cfg.floor_sweep);

  std::istringstream unknown("alpha = 3\n");
  CHECK_THROWS_AS(read_config(unknown), ConfigError);
  std::istringstream descending("n_list = 16, 8\n");
  CHECK_THROWS_AS(read_config(descending).validate(), ConfigError);
  std::istringstream garbage("trials = many\n");
  CHECK_THROWS_AS(read_config(garbage), ConfigError);
  ExperimentConfig narrow;
  narrow.t_max = 2.0;
  CHECK(narrow.validate().size() == 1);
}

TEST_CASE("unit conversion") {
  const auto u = convert_units(PhysicalSetup{});
  CHECK(u.dx_um == doctest::Approx(9.765625));
  CHECK(u.sigma_x_cells == doctest::Approx(32.0 / std::sqrt(12.0)));
  CHECK(u.sigma_x_cells == doctest::Approx(9.2372).epsilon(1e-4));
  CHECK(u.sigma_x_um == doctest::Approx(90.21).epsilon(1e-4));
  CHECK(u.sigma_t_ns == doctest::Approx(0.976).epsilon(1e-3));
  CHECK(u.pulse_width_ns == doctest::Approx(5.86).epsilon(1e-3));
}
