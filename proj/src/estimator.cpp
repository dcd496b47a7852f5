#include "photon_limits/estimator.hpp"

#include "photon_limits/errors.hpp"
#include "photon_limits/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace photon_limits {

std::string_view solver_name(Solver s) {
  switch (s) {
    case Solver::gradient: return "gradient";
    case Solver::search: return "search";
    case Solver::zero: return "zero";
  }
  return "?";
}

Solver parse_solver(std::string_view name) {
  if (name == "gradient") return Solver::gradient;
  if (name == "search") return Solver::search;
  if (name == "zero") return Solver::zero;
  throw ConfigError("unknown solver '" + std::string(name) + "' (expected gradient, search or zero)");
}

LikelihoodContext LikelihoodContext::gaussian(double alpha, double sigma, const FluxModel& floor_model,
                                              std::vector<double> stamps, const ObservationWindow& window,
                                              double dt) {
  if (!(sigma > 0.0)) throw DomainError("likelihood: sigma must be > 0");
  if (!(alpha > 0.0)) throw DomainError("likelihood: alpha must be > 0");
  LikelihoodContext ctx;
  ctx.flux_ = GaussianFlux{alpha, sigma};
  ctx.stamps_ = std::move(stamps);
  ctx.window_ = window;
  ctx.dt_ = dt;
  ctx.finish(floor_model);
  return ctx;
}

LikelihoodContext LikelihoodContext::tabulated(const EffectivePulse& pulse, std::vector<double> stamps,
                                               const ObservationWindow& window) {
  LikelihoodContext ctx;
  ctx.flux_ = TabulatedFlux{pulse.grid, pulse.signal, pulse.derivative, pulse.reference_tau, pulse.width()};
  ctx.stamps_ = std::move(stamps);
  ctx.window_ = window;
  ctx.dt_ = pulse.grid.dt;
  ctx.finish(pulse.pixel_model);
  return ctx;
}

void LikelihoodContext::finish(const FluxModel& floor_model) {
  floor_.resize(stamps_.size());
  for (std::size_t j = 0; j < stamps_.size(); ++j) floor_[j] = floor_model.floor(stamps_[j]);
  tau0_ = stamps_.empty() ? 0.5 * (window_.t_min + window_.t_max)
                          : std::accumulate(stamps_.begin(), stamps_.end(), 0.0) / static_cast<double>(stamps_.size());
}

double LikelihoodContext::width() const {
  if (const auto* g = std::get_if<GaussianFlux>(&flux_)) return g->sigma;
  const auto& t = std::get<TabulatedFlux>(flux_);
  return t.width > 0.0 ? t.width : 4.0 * t.grid.dt;
}

kernels::LikelihoodTerms LikelihoodContext::evaluate(double tau) const {
  const auto& k = kernels::active();
  if (const auto* g = std::get_if<GaussianFlux>(&flux_))
    return k.gaussian_likelihood({stamps_, floor_, tau, g->sigma, g->alpha});
  const auto& t = std::get<TabulatedFlux>(flux_);
  return k.tabulated_likelihood({stamps_, floor_, t.signal, t.derivative, t.grid.t0, t.grid.dt, tau - t.reference_tau});
}

double log_likelihood(const LikelihoodContext& ctx, double tau) { return ctx.evaluate(tau).value; }
double score(const LikelihoodContext& ctx, double tau) { return ctx.evaluate(tau).first; }

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

MlEstimate empty_estimate(const LikelihoodContext& ctx, Solver s) {
  MlEstimate e;
  e.tau_hat = ctx.initial();
  e.solver = s;
  e.empty = true;
  return e;
}

double tolerance(const LikelihoodContext& ctx, const SolverOptions& opt) { return ctx.dt() * opt.tolerance_fraction; }

// Golden-section maximisation of L on [a, b].
double golden(const LikelihoodContext& ctx, double a, double b, double tol, std::size_t& iters) {
  constexpr double r = 0.6180339887498949;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = log_likelihood(ctx, c);
  double fd = log_likelihood(ctx, d);
  while (b - a > tol) {
    ++iters;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = log_likelihood(ctx, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = log_likelihood(ctx, d);
    }
  }
  return 0.5 * (a + b);
}

double second_derivative(const LikelihoodContext& ctx, double tau, const kernels::LikelihoodTerms& t) {
  if (ctx.is_gaussian()) return t.second;
  const double h = 0.5 * ctx.dt();
  return (score(ctx, tau + h) - score(ctx, tau - h)) / (2.0 * h);
}

}  // namespace

MlEstimate estimate_search(const LikelihoodContext& ctx, const SolverOptions& opt) {
  if (ctx.stamps().empty()) return empty_estimate(ctx, Solver::search);
  const auto& w = ctx.window();
  const double step = std::max(ctx.dt(), 0.25 * ctx.width());
  const auto count = static_cast<std::size_t>(std::ceil(w.length() / step)) + 1;
  std::vector<double> taus(count);
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    taus[i] = std::min(w.t_min + static_cast<double>(i) * step, w.t_max);
    values[i] = log_likelihood(ctx, taus[i]);
  }
  const double best = *std::max_element(values.begin(), values.end());
  MlEstimate e;
  e.solver = Solver::search;
  e.iterations = count;
  if (best == kNegInf) {
    e.tau_hat = ctx.initial();
    return e;
  }
  // Local maxima close to the best one are treated as tied; keep the one
  // nearest the initial guess.
  std::size_t pick = count;
  std::size_t ties = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const bool left = i == 0 || values[i] >= values[i - 1];
    const bool right = i + 1 == count || values[i] >= values[i + 1];
    if (!(left && right) || values[i] < best - opt.tie_gap) continue;
    if (i > 0 && values[i] == values[i - 1]) continue;  // flat top already counted
    ++ties;
    if (pick == count || std::abs(taus[i] - ctx.initial()) < std::abs(taus[pick] - ctx.initial())) pick = i;
  }
  e.multimodal = ties > 1;
  const double a = std::max(w.t_min, taus[pick] - step);
  const double b = std::min(w.t_max, taus[pick] + step);
  e.tau_hat = golden(ctx, a, b, tolerance(ctx, opt), e.iterations);
  e.converged = true;
  return e;
}

MlEstimate estimate_zero(const LikelihoodContext& ctx, const SolverOptions& opt) {
  if (ctx.stamps().empty()) return empty_estimate(ctx, Solver::zero);
  const auto& w = ctx.window();
  const double tol = tolerance(ctx, opt);
  MlEstimate e;
  e.solver = Solver::zero;
  double a = std::clamp(ctx.initial(), w.t_min, w.t_max);
  double fa = score(ctx, a);
  if (fa == 0.0) {
    e.tau_hat = a;
    e.converged = true;
    return e;
  }
  // Walk downhill in |score| direction until the sign flips.
  const double dir = fa > 0.0 ? 1.0 : -1.0;
  const double h = 0.5 * ctx.width();
  double b = a;
  double fb = fa;
  bool bracket = false;
  while (e.iterations < opt.max_iterations) {
    ++e.iterations;
    const double next = std::clamp(b + dir * h, w.t_min, w.t_max);
    if (next == b) break;
    a = b;
    fa = fb;
    b = next;
    fb = score(ctx, b);
    if ((fa > 0.0) != (fb > 0.0) || fb == 0.0) {
      bracket = true;
      break;
    }
  }
  if (!bracket) {
    MlEstimate s = estimate_search(ctx, opt);
    s.solver = Solver::zero;
    s.fell_back = true;
    s.iterations += e.iterations;
    return s;
  }
  // Illinois variant of regula falsi, bisecting when it stalls.
  int side = 0;
  while (std::abs(b - a) > tol && e.iterations < opt.max_iterations) {
    ++e.iterations;
    double c = (fa * b - fb * a) / (fa - fb);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    if (!(c > lo && c < hi)) c = 0.5 * (a + b);
    const double fc = score(ctx, c);
    if (fc == 0.0) {
      a = b = c;
      break;
    }
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
    if (std::abs(b - a) > tol && (e.iterations % 8) == 0) {
      const double m = 0.5 * (a + b);
      const double fm = score(ctx, m);
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
    }
  }
  e.tau_hat = 0.5 * (a + b);
  e.converged = std::abs(b - a) <= tol;
  return e;
}

MlEstimate estimate_gradient(const LikelihoodContext& ctx, const SolverOptions& opt) {
  if (ctx.stamps().empty()) return empty_estimate(ctx, Solver::gradient);
  const auto& w = ctx.window();
  const double tol = tolerance(ctx, opt);
  const double width = ctx.width();
  MlEstimate e;
  e.solver = Solver::gradient;
  double tau = std::clamp(ctx.initial(), w.t_min, w.t_max);
  auto terms = ctx.evaluate(tau);
  if (terms.value == kNegInf) {
    MlEstimate s = estimate_search(ctx, opt);
    s.solver = Solver::gradient;
    s.fell_back = true;
    return s;
  }
  while (e.iterations < opt.max_iterations) {
    ++e.iterations;
    const double g = terms.first;
    const double hess = second_derivative(ctx, tau, terms);
    double step = hess < 0.0 ? -g / hess : g * width * width / static_cast<double>(ctx.stamps().size());
    step = std::clamp(step, -width, width);
    // Armijo backtracking on the ascent direction.
    double next = tau;
    kernels::LikelihoodTerms nt;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      next = std::clamp(tau + step, w.t_min, w.t_max);
      nt = ctx.evaluate(next);
      if (nt.value >= terms.value + 1e-4 * g * (next - tau)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      e.converged = std::abs(step) <= tol;
      break;
    }
    const double moved = next - tau;
    tau = next;
    terms = nt;
    if (std::abs(moved) <= tol) {
      e.converged = true;
      break;
    }
  }
  e.tau_hat = tau;
  return e;
}

MlEstimate estimate(const LikelihoodContext& ctx, Solver solver, const SolverOptions& opt) {
  switch (solver) {
    case Solver::gradient: return estimate_gradient(ctx, opt);
    case Solver::search: return estimate_search(ctx, opt);
    case Solver::zero: return estimate_zero(ctx, opt);
  }
  throw ConfigError("unknown solver");
}

ScoreStatistics score_statistics(const FluxModel& model, double tau0, const ObservationWindow& window,
                                 std::size_t trials, std::uint64_t seed) {
  if (!model.gaussian()) throw UnsupportedModel("score statistics need a Gaussian pulse");
  ScoreStatistics out;
  out.trials = trials;
  if (trials == 0 || model.alpha == 0.0) return out;
  std::vector<double> f(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    RngStream rng(seed, {0x5c0e, i});
    auto stamps = sample_gaussian(model, tau0, window, rng);
    const auto ctx =
        LikelihoodContext::gaussian(model.alpha, model.sigma_t(), model, std::move(stamps.times), window, 1.0 / 256.0);
    f[i] = score(ctx, tau0);
  }
  out.mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(trials);
  double ss = 0.0;
  for (double x : f) ss += (x - out.mean) * (x - out.mean);
  out.variance = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;
  return out;
}

BootstrapResult bootstrap_variance(std::span<const double> stamps, std::size_t k, std::size_t resamples,
                                   RngStream& rng) {
  if (stamps.empty()) throw DomainError("bootstrap needs at least one stamp");
  if (k == 0) throw DomainError("bootstrap draw size must be >= 1");
  if (resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  std::uniform_int_distribution<std::size_t> pick(0, stamps.size() - 1);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += stamps[pick(rng.engine())];
    m = s / static_cast<double>(k);
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(resamples);
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  return {ss / static_cast<double>(resamples - 1), resamples, k};
}

}  // namespace photon_limits
