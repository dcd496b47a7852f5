#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "photon_limits/errors.hpp"
#include "photon_limits/pulse.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace photon_limits;

namespace {

// Composite Simpson rule; independent of the library's trapezoid tables.
template <class F>
double simpson(F f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double normal_pdf(double x, double s) { return std::exp(-0.5 * x * x / (s * s)) / (std::sqrt(2.0 * std::numbers::pi) * s); }

}  // namespace

TEST_CASE("eval_flux examples") {
  FluxModel m;
  m.alpha = 1.0;
  m.pulse = GaussianPulse{0.5};
  CHECK(eval_flux(m, 5.0, 5.0) == doctest::Approx(0.7978845608));

  FluxModel floor_only;
  floor_only.alpha = 0.0;
  floor_only.lambda_b = 0.02;
  CHECK(eval_flux(floor_only, 5.0, 1.234) == doctest::Approx(0.02));
  CHECK(eval_flux(floor_only, 5.0, 9.0) == doctest::Approx(0.02));

  FluxModel pile;
  pile.alpha = 0.0;
  pile.pileup = PileUp{1.0, 4.0};
  CHECK(eval_flux(pile, 5.0, 0.0) == doctest::Approx(4.0));
}

TEST_CASE("eval_flux is nonnegative over random models") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    FluxModel m;
    m.alpha = 100.0 * u(rng);
    m.lambda_b = 10.0 * u(rng);
    m.pulse = GaussianPulse{0.01 + u(rng)};
    if (i % 2) m.pileup = PileUp{50.0 * u(rng), 0.1 + 5.0 * u(rng)};
    if (i % 3 == 0) m.dark = DarkCount{20.0 * u(rng), 1 + static_cast<std::size_t>(100 * u(rng))};
    CHECK(eval_flux(m, 10.0 * u(rng), 12.0 * u(rng) - 1.0) >= 0.0);
  }
}

TEST_CASE("pulse_energy examples") {
  FluxModel m;
  m.alpha = 1.0;
  CHECK(pulse_energy(m, {0.0, 10.0}) == doctest::Approx(1.0));
  m.lambda_b = 0.5;
  CHECK(pulse_energy(m, {-2.0, 2.0}) == doctest::Approx(3.0));
}

TEST_CASE("pulse_energy matches quadrature of the flux for every model variant") {
  const ObservationWindow w{0.0, 10.0};
  std::vector<FluxModel> models;
  FluxModel base;
  base.alpha = 1e4;
  base.lambda_b = 100.0;
  base.pulse = GaussianPulse{0.5};
  models.push_back(base);
  FluxModel pile = base;
  pile.pileup = PileUp{1e5, 4.0};
  models.push_back(pile);
  FluxModel dark = base;
  dark.dark = DarkCount{50.0, 8};
  models.push_back(dark);
  FluxModel all = pile;
  all.dark = DarkCount{50.0, 8};
  models.push_back(all);
  for (const auto& m : models) {
    const double q = simpson([&](double t) { return eval_flux(m, 5.0, t); }, w.t_min, w.t_max);
    CHECK(pulse_energy(m, w) == doctest::Approx(q).epsilon(1e-4));
  }
  CHECK(pulse_energy(pile, w) == doctest::Approx(1e4 + 1e5 * (1.0 - std::exp(-40.0)) + 1000.0));
}

TEST_CASE("pulse_energy counts pile-up only for t >= 0") {
  FluxModel m;
  m.alpha = 0.0;
  m.pileup = PileUp{10.0, 2.0};
  const ObservationWindow w{-3.0, 1.0};
  const double q = simpson([&](double t) { return eval_flux(m, 0.0, t); }, 0.0, 1.0);
  CHECK(pulse_energy(m, w) == doctest::Approx(q).epsilon(1e-6));
  CHECK(pileup_mass(PileUp{10.0, 2.0}, {-5.0, -1.0}) == 0.0);
}

TEST_CASE("gaussian pulse derivative") {
  const PulseShape g = GaussianPulse{0.5};
  CHECK(pulse_derivative(g, 0.0) == doctest::Approx(0.0));
  const PulseShape unit = GaussianPulse{1.0};
  CHECK(pulse_derivative(unit, 1.0) == doctest::Approx(-normal_pdf(1.0, 1.0)));
  CHECK(pulse_derivative(unit, 1.0) == doctest::Approx(-0.24197).epsilon(1e-4));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const double fd = (pulse_value(g, t + h) - pulse_value(g, t - h)) / (2.0 * h);
    CHECK(std::abs(pulse_derivative(g, t) - fd) < 1e-6);
  }
}

TEST_CASE("tabulated pulse: normalization, derivative and domain") {
  // trapezoid: ramp up on [0,1], flat on [1,3], ramp down on [3,4]
  std::vector<double> t, s;
  for (int k = 0; k <= 400; ++k) {
    const double x = k * 0.01;
    t.push_back(x);
    s.push_back(x < 1.0 ? x : (x <= 3.0 ? 1.0 : 4.0 - x));
  }
  const TabulatedPulse p(t, s);
  CHECK(p.renormalized());
  double mass = 0.0;
  for (std::size_t k = 1; k < p.values().size(); ++k) mass += 0.005 * (p.values()[k] + p.values()[k - 1]);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.derivative(2.0) == doctest::Approx(0.0));
  CHECK(p.derivative(1.5) == doctest::Approx(0.0));
  CHECK(p.derivative(0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(p.value(-1.0) == 0.0);
  CHECK(p.mean() == doctest::Approx(2.0));
  CHECK_THROWS_AS(p.derivative(4.5), DomainError);
  CHECK_THROWS_AS(p.derivative(-0.5), DomainError);
}

TEST_CASE("tabulated pulse: invalid tables are rejected") {
  std::vector<double> t{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(TabulatedPulse(t, std::vector<double>{0.0, -1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(TabulatedPulse(t, std::vector<double>{0.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(TabulatedPulse(std::vector<double>{0.0, 2.0, 1.0}, std::vector<double>{1.0, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(TabulatedPulse(std::vector<double>{0.0, 1.0, 3.0}, std::vector<double>{1.0, 1.0, 1.0}), DomainError);
  const TabulatedPulse ok(t, std::vector<double>{0.0, 1.0, 0.0});
  CHECK_FALSE(ok.renormalized());
}

TEST_CASE("tabulated pulse file format") {
  std::istringstream in("# pulse\n0 0\n0.5 1\n\n1.0 2\n1.5 1\n2.0 0\n");
  const auto p = read_tabulated_pulse(in);
  CHECK(p.grid().size == 5);
  CHECK(p.mean() == doctest::Approx(1.0));
  std::istringstream bad("0 0\n1 x\n");
  CHECK_THROWS_AS(read_tabulated_pulse(bad), ParseError);
}

TEST_CASE("window and model validation") {
  CHECK_THROWS_AS(ObservationWindow({1.0, 1.0}).validate(), DomainError);
  CHECK(ObservationWindow{0.0, 2.0}.too_narrow_for(0.5));
  CHECK_FALSE(ObservationWindow{0.0, 10.0}.too_narrow_for(0.5));
  FluxModel m;
  m.alpha = -1.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m.alpha = 1.0;
  m.pileup = PileUp{1.0, 0.0};
  CHECK_THROWS_AS(m.validate(), DomainError);
  FluxModel tab;
  tab.pulse = TabulatedPulse(std::vector<double>{0.0, 1.0, 2.0}, std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(tab.sigma_t(), UnsupportedModel);
}

TEST_CASE("per-pixel model splits every flux term") {
  FluxModel m;
  m.alpha = 1e4;
  m.lambda_b = 100.0;
  m.pileup = PileUp{1e5, 4.0};
  m.dark = DarkCount{64.0, 1};
  const auto p = m.per_pixel(16);
  CHECK(p.alpha == doctest::Approx(625.0));
  CHECK(p.lambda_b == doctest::Approx(6.25));
  CHECK(p.pileup->beta == doctest::Approx(6250.0));
  CHECK(p.constant_floor() == doctest::Approx(6.25 + 4.0));
}
