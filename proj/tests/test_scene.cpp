#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "photon_limits/errors.hpp"
#include "photon_limits/scene.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace photon_limits;

namespace {

FluxModel gaussian_model(double alpha, double sigma) {
  FluxModel m;
  m.alpha = alpha;
  m.pulse = GaussianPulse{sigma};
  return m;
}

double l1_signal(const EffectivePulse& e, const GaussianEffectivePulse& g) {
  double d = 0.0;
  for (std::size_t k = 0; k < e.signal.size(); ++k) {
    const double t = e.grid.at(k);
    const double z = (t - g.tau) / g.sigma;
    const double ref = g.alpha * std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * g.sigma);
    d += std::abs(e.signal[k] - ref);
  }
  return d * e.grid.dt;
}

double second_moment(const EffectivePulse& e) {
  const double w = e.width();
  return w * w;
}

}  // namespace

TEST_CASE("sigmoid values") {
  CHECK(sigmoid_toa(0.5) == doctest::Approx(6.0));
  CHECK(sigmoid_toa(0.0) == doctest::Approx(4.0 + 4.0 / (1.0 + std::exp(10.0))));
  CHECK(sigmoid_toa(0.0) == doctest::Approx(4.000181).epsilon(1e-6));
  CHECK(sigmoid_toa(1.0) == doctest::Approx(7.999818).epsilon(1e-6));
  const auto p = make_sigmoid_profile(1.0 / 2048);
  CHECK(p.size() == 2048);
  CHECK(p[1024] == doctest::Approx(sigmoid_toa(1024.5 / 2048)));
  CHECK_THROWS_AS(make_sigmoid_profile(0.3), DomainError);
}

TEST_CASE("gradient examples") {
  const auto flat = make_flat_profile(1.0 / 256, 3.0);
  const auto gf = gradient(flat);
  CHECK(gf.aggregate == 0.0);
  for (double s : gf.slope_x) CHECK(s == 0.0);

  const auto ramp = make_ramp_profile(1.0 / 256, 1.0);
  const auto gr = gradient(ramp);
  CHECK(gr.aggregate == doctest::Approx(1.0));
  for (double s : gr.slope_x) CHECK(s == doctest::Approx(1.0));

  // analytic derivative 80 e^{-20(x-1/2)} / (1 + e^{-20(x-1/2)})^2 peaks at 20
  const auto sig = make_sigmoid_profile(1.0 / 2048);
  const auto gs = gradient(sig);
  double peak = 0.0;
  for (double s : gs.slope_x) peak = std::max(peak, s);
  CHECK(peak == doctest::Approx(20.0).epsilon(1e-4));
}

TEST_CASE("pixel cells tile the grid") {
  for (std::size_t cells : {64u, 100u, 2048u})
    for (std::size_t n_pix : {1u, 3u, 7u, 64u}) {
      std::size_t next = 0;
      for (std::size_t n = 0; n < n_pix; ++n) {
        const auto [lo, hi] = pixel_cells(cells, n_pix, n);
        CHECK(lo == next);
        CHECK(hi > lo);
        next = hi;
      }
      CHECK(next == cells);
    }
}

TEST_CASE("bin_scene") {
  const auto model = gaussian_model(1e4, 0.5);
  SUBCASE("flat scene keeps sigma_t") {
    const auto b = bin_scene(make_flat_profile(1.0 / 512, 5.0), model, 16);
    for (double s : b.sigma_n) CHECK(s == doctest::Approx(0.5));
    for (double t : b.tau) CHECK(t == doctest::Approx(5.0));
  }
  SUBCASE("sigma_x of a 32-cell group on a 1024 grid") {
    const auto b = bin_scene(make_ramp_profile(1.0 / 1024, 1.0), model, 32);
    CHECK(b.sigma_x == doctest::Approx(1.0 / (std::sqrt(12.0) * 32.0)));
    CHECK(b.sigma_x * 1024.0 == doctest::Approx(9.2376).epsilon(1e-4));
  }
  SUBCASE("ramp midpoints and slopes") {
    const auto b = bin_scene(make_ramp_profile(1.0 / 1024, 2.0, 1.0), model, 8);
    for (std::size_t n = 0; n < 8; ++n) {
      CHECK(b.midpoints[n] == doctest::Approx((2.0 * n + 1.0) / 16.0));
      CHECK(b.tau[n] == doctest::Approx(1.0 + 2.0 * b.midpoints[n]));
      CHECK(b.slope[n] == doctest::Approx(2.0));
      CHECK(b.sigma_n[n] * b.sigma_n[n] == doctest::Approx(4.0 / 768.0 + 0.25));
    }
    CHECK(b.c_sq == doctest::Approx(4.0));
  }
  SUBCASE("sigma_n never below sigma_t") {
    const auto b = bin_scene(make_sigmoid_profile(1.0 / 2048), model, 64);
    for (double s : b.sigma_n) CHECK(s >= 0.5);
  }
  CHECK_THROWS_AS(bin_scene(make_flat_profile(1.0 / 64, 1.0), model, 128), ConfigError);
  CHECK_THROWS_AS(bin_scene(make_flat_profile(1.0 / 64, 1.0), model, 0), ConfigError);
}

TEST_CASE("effective_pulse_gaussian closed form") {
  const auto model = gaussian_model(800.0, 0.5);
  const auto b = bin_scene(make_ramp_profile(1.0 / 1024, 1.0), model, 8);
  const auto g = effective_pulse_gaussian(b, model, 3);
  CHECK(g.sigma * g.sigma == doctest::Approx(1.0 / 768.0 + 0.25));
  CHECK(g.alpha == doctest::Approx(100.0));
  double mass = 0.0;
  const double h = 1e-3;
  for (double t = g.tau - 10.0; t < g.tau + 10.0; t += h) mass += g.value(t) * h;
  CHECK(mass == doctest::Approx(100.0).epsilon(1e-6));

  FluxModel tab;
  tab.pulse = TabulatedPulse(std::vector<double>{0.0, 1.0, 2.0}, std::vector<double>{0.0, 1.0, 0.0});
  const auto bt = bin_scene(make_flat_profile(1.0 / 64, 1.0), tab, 4);
  CHECK(bt.sigma_n.empty());
  CHECK_THROWS_AS(effective_pulse_gaussian(bt, tab, 0), UnsupportedModel);
}

TEST_CASE("effective_pulse_exact") {
  const ObservationWindow w{0.0, 10.0};
  const double dt = 1.0 / 256;
  SUBCASE("flat scene returns the shifted Gaussian") {
    const auto model = gaussian_model(1e4, 0.5);
    const auto e = effective_pulse_exact(make_flat_profile(1.0 / 1024, 5.0), model, 16, 3, w, dt);
    const auto b = bin_scene(make_flat_profile(1.0 / 1024, 5.0), model, 16);
    const auto g = effective_pulse_gaussian(b, model, 3);
    double maxdiff = 0.0;
    for (std::size_t k = 0; k < e.signal.size(); ++k)
      maxdiff = std::max(maxdiff, std::abs(e.signal[k] - (g.value(e.grid.at(k)) - g.pixel_model.floor(0.0))));
    CHECK(maxdiff / g.alpha < 1e-4);
    CHECK(e.signal_mass() == doctest::Approx(625.0).epsilon(1e-6));
  }
  SUBCASE("ramp broadens the pulse by the boxcar variance") {
    const auto model = gaussian_model(1e4, 0.2);
    for (std::size_t n_pix : {2u, 4u, 8u}) {
      const auto e = effective_pulse_exact(make_ramp_profile(1.0 / 2048, 1.0, 4.0), model, n_pix, 0, w, dt);
      const double expect = 1.0 / (12.0 * n_pix * n_pix) + 0.04;
      CHECK(second_moment(e) == doctest::Approx(expect).epsilon(2e-3));
    }
  }
  SUBCASE("sigmoid pixel 31 of 64 is close to the Gaussian approximation") {
    const auto model = gaussian_model(1e4, 0.5);
    const auto prof = make_sigmoid_profile(1.0 / 2048);
    const auto b = bin_scene(prof, model, 64);
    const auto e = effective_pulse_exact(prof, model, 64, 31, w, dt);
    const auto g = effective_pulse_gaussian(b, model, 31);
    CHECK(l1_signal(e, g) / g.alpha < 0.02);
  }
  SUBCASE("smooth profile, N >= 16: L1 distance within 5% for every pixel") {
    const auto model = gaussian_model(1e4, 0.5);
    const auto prof = make_sigmoid_profile(1.0 / 2048);
    const auto b = bin_scene(prof, model, 16);
    for (std::size_t n = 0; n < 16; ++n) {
      const auto e = effective_pulse_exact(prof, model, 16, n, w, dt);
      const auto g = effective_pulse_gaussian(b, model, n);
      CHECK(l1_signal(e, g) < 0.05 * g.alpha);
    }
  }
  SUBCASE("tabulated pulse shape is supported") {
    FluxModel tab;
    tab.alpha = 100.0;
    std::vector<double> t, s;
    for (int k = 0; k <= 200; ++k) {
      t.push_back(-1.0 + 0.01 * k);
      s.push_back(1.0 - std::abs(t.back()));
    }
    tab.pulse = TabulatedPulse(t, s);
    const auto e = effective_pulse_exact(make_flat_profile(1.0 / 64, 5.0), tab, 4, 1, w, dt);
    CHECK(e.signal_mass() == doctest::Approx(25.0).epsilon(1e-3));
    CHECK(e.value(5.0) == doctest::Approx(25.0).epsilon(1e-3));
  }
  CHECK_THROWS_AS(effective_pulse_exact(make_flat_profile(1.0 / 64, 5.0), gaussian_model(1, 0.5), 4, 4, w, dt),
                  DomainError);
}

TEST_CASE("piecewise reconstruction") {
  const std::vector<double> one{3.5};
  const auto c = piecewise_reconstruction(one, 128);
  CHECK(c.min() == 3.5);
  CHECK(c.max() == 3.5);

  // ramp tau = x with midpoint estimates: squared error integrates to 1/(12 N^2)
  const std::size_t cells = 4096, n_pix = 8;
  const auto truth = make_ramp_profile(1.0 / cells, 1.0);
  const auto b = bin_scene(truth, gaussian_model(1.0, 0.5), n_pix);
  const auto rec = piecewise_reconstruction(b.tau, cells);
  double err = 0.0;
  for (std::size_t k = 0; k < cells; ++k) err += (rec[k] - truth[k]) * (rec[k] - truth[k]);
  err /= cells;
  CHECK(err == doctest::Approx(1.0 / (12.0 * n_pix * n_pix)).epsilon(1e-5));
}

TEST_CASE("2D binning") {
  const std::size_t size = 256;
  std::vector<double> v(size * size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) v[r * size + c] = (c + 0.5) / size + (r + 0.5) / size;
  const auto ramp = ToaProfile::grid(size, size, v);
  const auto model = gaussian_model(1e6, 0.5);
  const auto b = bin_scene_2d(ramp, model, 8, 8);
  CHECK(b.c_norm_sq_mean == doctest::Approx(2.0));
  CHECK(b.tau[3 * 8 + 5] == doctest::Approx(7.0 / 16.0 + 11.0 / 16.0));
  CHECK(gradient(ramp).aggregate == doctest::Approx(2.0));
  CHECK_THROWS_AS(bin_scene_2d(ramp, model, 8, 4), ConfigError);

  // separable scene: the 2D gradient energy splits into the two axes
  const auto sig = make_sigmoid_profile(1.0 / size);
  const auto gx = gradient(sig).aggregate;
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) v[r * size + c] = sig[c] + 2.0 * (r + 0.5) / size;
  const auto sep = ToaProfile::grid(size, size, v);
  CHECK(gradient(sep).aggregate == doctest::Approx(gx + 4.0));
}

TEST_CASE("depth map and blur") {
  const auto d = make_smooth_depth_map(128);
  CHECK(d.min() == doctest::Approx(10.0));
  CHECK(d.max() == doctest::Approx(20.0));
  const auto b = gaussian_blur(d, 2.0);
  CHECK(gradient(b).aggregate < gradient(d).aggregate);
  const auto flat = ToaProfile::grid(16, 16, std::vector<double>(256, 7.0));
  const auto fb = gaussian_blur(flat, 3.0);
  for (double x : fb.values()) CHECK(x == doctest::Approx(7.0));
}

TEST_CASE("profile text format round trip") {
  const auto d = make_smooth_depth_map(16);
  std::stringstream s;
  write_profile(s, d);
  const auto back = read_profile(s);
  REQUIRE(back.size() == d.size());
  CHECK(back.is_2d());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(back[i] == d[i]);
  std::istringstream one("1 3\n1 2 3\n");
  CHECK_FALSE(read_profile(one).is_2d());
  std::istringstream bad("2 2\n1 2 3\n");
  CHECK_THROWS_AS(read_profile(bad), ParseError);
}
