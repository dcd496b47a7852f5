#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "photon_limits/errors.hpp"
#include "photon_limits/sampler.hpp"
#include "photon_limits/theory.hpp"

#include <cmath>
#include <numbers>

using namespace photon_limits;

namespace {

const ObservationWindow kWindow{0.0, 10.0};
constexpr double kDt = 1.0 / 256;

FluxModel gaussian_model(double alpha, double sigma, double floor = 0.0) {
  FluxModel m;
  m.alpha = alpha;
  m.lambda_b = floor;
  m.pulse = GaussianPulse{sigma};
  return m;
}

template <class F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Fisher integral for alpha N(t | tau, sigma^2) + floor by Simpson's rule.
double fisher_oracle(double alpha, double sigma, double floor, double tau) {
  auto f = [&](double t) {
    const double z = (t - tau) / sigma;
    const double s = std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    const double ds = -z / sigma * s;
    return alpha * alpha * ds * ds / (alpha * s + floor);
  };
  return simpson(f, kWindow.t_min, kWindow.t_max, 20000);
}

// Integral of (tau(x) - bin mean)^2 over [0, 1] for an analytic profile.
template <class F>
double bias_oracle(F tau, std::size_t n) {
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double a = static_cast<double>(p) / n, b = static_cast<double>(p + 1) / n;
    const double m = simpson(tau, a, b) * n;
    total += simpson([&](double x) { return (tau(x) - m) * (tau(x) - m); }, a, b);
  }
  return total;
}

// KL(boxcar of width W || N(0, s^2)) by quadrature of the boxcar log-ratio.
double kl_boxcar(double w, double s) {
  auto integrand = [&](double x) {
    const double log_q = -0.5 * std::log(2.0 * std::numbers::pi * s * s) - 0.5 * x * x / (s * s);
    return (1.0 / w) * (-std::log(w) - log_q);
  };
  return simpson(integrand, -0.5 * w, 0.5 * w, 400);
}

double argmin_golden(auto f, double a, double b) {
  const double r = 0.6180339887498949;
  for (int i = 0; i < 200; ++i) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("single-pixel variance") {
  const auto g0 = single_pixel_variance(gaussian_model(100.0, 0.5), 5.0, kWindow, kDt);
  CHECK(g0.variance == doctest::Approx(0.25 / 100.0).epsilon(1e-6));
  const auto g2 = single_pixel_variance(gaussian_model(200.0, 0.5), 5.0, kWindow, kDt);
  CHECK(g2.variance == doctest::Approx(0.5 * g0.variance).epsilon(1e-9));

  const auto f30 = single_pixel_variance(gaussian_model(100.0, 0.5, 30.0), 5.0, kWindow, kDt);
  CHECK(f30.information == doctest::Approx(fisher_oracle(100.0, 0.5, 30.0, 5.0)).epsilon(1e-4));
  CHECK(f30.variance > g0.variance);

  // grid refinement self-check
  const auto half = single_pixel_variance(gaussian_model(100.0, 0.5, 30.0), 5.0, kWindow, kDt / 2);
  CHECK(f30.variance == doctest::Approx(half.variance).epsilon(5e-3));

  const auto none = single_pixel_variance(gaussian_model(0.0, 0.5, 1.0), 5.0, kWindow, kDt);
  CHECK(none.infinite);
  CHECK(std::isinf(none.variance));
}

TEST_CASE("single-pixel variance from an effective pulse") {
  const auto m = gaussian_model(1600.0, 0.5, 160.0);
  const auto e = effective_pulse_exact(make_flat_profile(1.0 / 256, 5.0), m, 16, 3, kWindow, kDt);
  CHECK(single_pixel_variance(e).information == doctest::Approx(fisher_oracle(100.0, 0.5, 10.0, 5.0)).epsilon(2e-3));
}

TEST_CASE("optimal boxcar sigma") {
  CHECK(optimal_boxcar_sigma(1.0) == doctest::Approx(0.288675).epsilon(1e-6));
  CHECK(optimal_boxcar_sigma(1.0 / 8) == doctest::Approx(0.036084).epsilon(1e-5));
  for (double w : {0.1, 1.0, 10.0}) {
    const double s = argmin_golden([&](double x) { return kl_boxcar(w, x); }, 0.01 * w, 2.0 * w);
    CHECK(std::abs(s - optimal_boxcar_sigma(w)) < 1e-3 * std::max(1.0, w));
  }
  CHECK_THROWS_AS(optimal_boxcar_sigma(0.0), DomainError);
}

TEST_CASE("1D bias") {
  CHECK(bias_1d(0.0, 10) == 0.0);
  CHECK(bias_1d(1.0, 10) == doctest::Approx(1.0 / 1200.0));
  CHECK(bias_oracle([](double x) { return x; }, 10) == doctest::Approx(1.0 / 1200.0).epsilon(1e-9));
  CHECK(binned_bias(make_ramp_profile(1.0 / 2000, 1.0), 10) == doctest::Approx(1.0 / 1200.0).epsilon(1e-5));

  const auto prof = make_sigmoid_profile(1.0 / 2048);
  for (std::size_t n : {16u, 32u, 64u}) {
    const double c_sq = bin_scene(prof, gaussian_model(1.0, 0.5), n).c_sq;
    const double oracle = bias_oracle(sigmoid_toa, n);
    CHECK(bias_1d(c_sq, n) == doctest::Approx(oracle).epsilon(0.05));
    CHECK(binned_bias(prof, n) == doctest::Approx(oracle).epsilon(0.01));
  }
}

TEST_CASE("1D variance and totals") {
  CHECK(variance_1d(0.0, 0.1, 0.5, 1e4, 64) == doctest::Approx(64 * 0.25 / 1e4));
  const double c_sq = 3.0;
  const std::size_t n = 32;
  const double sx = 1.0 / (std::sqrt(12.0) * n);
  CHECK(variance_1d(c_sq, sx, 0.5, 1e4, n) == doctest::Approx(n / 1e4 * (c_sq / (12.0 * n * n) + 0.25)));
  const auto full = mse_1d(c_sq, 0.5, 1e4, n);
  CHECK(full.total == full.bias + full.variance);
  const auto simp = mse_1d_simplified(c_sq, 0.5, 1e4, n);
  CHECK(simp.mode == PredictionMode::simplified);
  CHECK(simp.bias == full.bias);
  CHECK(simp.variance < full.variance);
  const auto flat_full = mse_1d(0.0, 0.5, 1e4, n);
  const auto flat_simp = mse_1d_simplified(0.0, 0.5, 1e4, n);
  CHECK(flat_full.total == flat_simp.total);
  CHECK_THROWS_AS(variance_1d(1.0, 0.1, 0.5, 0.0, 4), DomainError);

  const auto binned = bin_scene(make_sigmoid_profile(1.0 / 2048), gaussian_model(1.0, 0.5), 64);
  CHECK(mse_1d(binned, 0.5, 1e4).total == doctest::Approx(mse_1d(binned.c_sq, 0.5, 1e4, 64).total));
}

TEST_CASE("closed-form monotonicity in N") {
  // variance rises once N^2 > c^2 / (12 sigma_t^2), here from N = 2
  double prev_bias = INFINITY, prev_var = 0.0;
  for (std::size_t n = 2; n <= 512; ++n) {
    const auto p = mse_1d(10.0, 0.5, 1e4, n);
    CHECK(p.bias < prev_bias);
    CHECK(p.variance > prev_var);
    prev_bias = p.bias;
    prev_var = p.variance;
  }
}

TEST_CASE("optimal N in 1D matches a dense grid search") {
  for (double c_sq : {1.0, 10.0, 30.0})
    for (double alpha0 : {1e3, 1e4, 1e5}) {
      const double n_star = optimal_n_1d(c_sq, 0.5, alpha0);
      double best = INFINITY, arg = 0.0;
      for (double n = 1.0; n < 2000.0; n += 0.01) {
        const double v = c_sq / (12 * n * n) + n / alpha0 * (c_sq / (12 * n * n) + 0.25);
        if (v < best) {
          best = v;
          arg = n;
        }
      }
      CHECK(std::abs(n_star - arg) <= 0.01);
    }
}

TEST_CASE("numerical MSE") {
  const auto model = gaussian_model(1e4, 0.5);
  SUBCASE("reduces to the closed form without a floor") {
    const auto ramp = make_ramp_profile(1.0 / 2048, 2.0, 3.0);
    for (std::size_t n : {8u, 32u, 128u}) {
      const auto num = mse_numerical(ramp, model, n, kWindow, kDt);
      const auto cf = mse_1d(4.0, 0.5, 1e4, n);
      CHECK(num.total == doctest::Approx(cf.total).epsilon(0.01));
      CHECK(num.mode == PredictionMode::numerical);
    }
    const auto sig = make_sigmoid_profile(1.0 / 2048);
    NumericalOptions opt;
    opt.pulse = NumericalPulse::gaussian_approx;
    for (std::size_t n : {16u, 64u}) {
      const auto b = bin_scene(sig, model, n);
      CHECK(mse_numerical(sig, model, n, kWindow, kDt, opt).total ==
            doctest::Approx(mse_1d(b, 0.5, 1e4).total).epsilon(0.01));
    }
  }
  SUBCASE("grows with the ambient floor") {
    const auto sig = make_sigmoid_profile(1.0 / 2048);
    NumericalOptions fast;
    fast.averaging = NumericalAveraging::representative;
    double prev = 0.0;
    for (double lb : {0.0, 10.0, 30.0, 100.0}) {
      const auto p = mse_numerical(sig, gaussian_model(1e4, 0.5, lb), 32, kWindow, kDt, fast);
      CHECK(p.total > prev);
      prev = p.total;
    }
  }
}

TEST_CASE("2D predictions") {
  const std::size_t n = 16;
  const auto flat = mse_2d(0.0, 0.5, 1e6, n);
  CHECK(flat.bias == 0.0);
  CHECK(flat.variance == doctest::Approx(n * n * 0.25 / 1e6));
  CHECK(bias_2d(2.0, n) == doctest::Approx(1.0 / (6.0 * n * n)));
  const double ss = 1.0 / (std::sqrt(12.0) * n);
  CHECK(variance_2d(2.0, ss, 0.5, 1e6, n) == doctest::Approx(n * n / 1e6 * (2.0 * ss * ss + 0.25)));

  CHECK(std::isinf(optimal_n_2d(1e6, 30.0, 0.0)));
  CHECK(optimal_n_2d(16e6, 30.0, 0.5) == doctest::Approx(2.0 * optimal_n_2d(1e6, 30.0, 0.5)));
  for (double c2 : {100.0, 305.0, 1420.0}) {
    const double n_star = optimal_n_2d(1e6, std::sqrt(c2), 0.5);
    double best = INFINITY, arg = 0.0;
    for (double x = 1.0; x < 500.0; x += 0.01) {
      const double v = c2 / (12 * x * x) + x * x / 1e6 * (c2 / (12 * x * x) + 0.25);
      if (v < best) {
        best = v;
        arg = x;
      }
    }
    CHECK(std::abs(n_star - arg) <= 0.01 * 1.5);
  }
}

TEST_CASE("noisy-profile bias correction") {
  CHECK(noisy_bias_correction(2.0, 8, 0.0) == bias_1d(2.0, 8));
  for (std::size_t n : {4u, 16u, 64u}) CHECK(noisy_bias_correction(0.0, n, 0.01) == doctest::Approx(0.01));

  const std::size_t cells = 2048, n = 32;
  const auto clean = make_sigmoid_profile(1.0 / cells);
  std::vector<double> v(clean.values().begin(), clean.values().end());
  RngStream rng(3);
  for (auto& x : v) x += 0.1 * rng.normal();
  const auto noisy = ToaProfile::line(v);
  // independent bin-average integral on the sampled noisy profile
  double oracle = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double m = 0.0;
    const std::size_t per = cells / n;
    for (std::size_t k = p * per; k < (p + 1) * per; ++k) m += v[k];
    m /= per;
    for (std::size_t k = p * per; k < (p + 1) * per; ++k) oracle += (v[k] - m) * (v[k] - m);
  }
  oracle /= cells;
  const double c_sq = bin_scene(clean, gaussian_model(1.0, 0.5), n).c_sq;
  CHECK(noisy_bias_correction(c_sq, n, 0.01) == doctest::Approx(oracle).epsilon(0.1));
  CHECK(binned_bias(noisy, n) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("prediction and curve invariants") {
  const auto p = make_prediction(8, 0.25, 0.5, PredictionMode::closed_form);
  CHECK(p.total == 0.75);
  CHECK_THROWS_AS(make_prediction(8, -1.0, 0.5, PredictionMode::closed_form), DomainError);
  SweepCurve c;
  c.theory = {mse_1d(1.0, 0.5, 1e4, 8), mse_1d(1.0, 0.5, 1e4, 16)};
  CHECK_NOTHROW(c.validate());
  c.simulated.resize(1);
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.simulated.clear();
  std::swap(c.theory[0], c.theory[1]);
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK(mode_name(PredictionMode::numerical) == "numerical");
}
