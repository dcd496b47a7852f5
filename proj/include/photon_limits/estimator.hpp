#pragma once

// Per-pixel maximum-likelihood delay estimation.
//
//   L(tau) = sum_j log lambda(t_j; tau)
//
// The signal part is either a closed-form Gaussian or a tabulated effective
// pulse translated in time; the floor (ambient, dark count, pile-up) does not
// move with tau and is evaluated once per stamp.

#include "photon_limits/kernels.hpp"
#include "photon_limits/pulse.hpp"
#include "photon_limits/sampler.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace photon_limits {

struct EffectivePulse;

enum class Solver { gradient, search, zero };

std::string_view solver_name(Solver s);
// Throws ConfigError for anything other than gradient|search|zero.
Solver parse_solver(std::string_view name);

struct GaussianFlux {
  double alpha = 1.0;
  double sigma = 1.0;
};

// Signal table valid for delay `reference_tau`; candidate tau shifts it by
// tau - reference_tau. The spans must outlive the context.
struct TabulatedFlux {
  TimeGrid grid;
  std::span<const double> signal;
  std::span<const double> derivative;
  double reference_tau = 0.0;
  double width = 0.0;
};

class LikelihoodContext {
 public:
  static LikelihoodContext gaussian(double alpha, double sigma, const FluxModel& floor_model,
                                    std::vector<double> stamps, const ObservationWindow& window, double dt);
  static LikelihoodContext tabulated(const EffectivePulse& pulse, std::vector<double> stamps,
                                     const ObservationWindow& window);

  // Initial guess; defaults to the stamp mean (window centre when empty).
  void set_initial(double tau) { tau0_ = tau; }
  double initial() const { return tau0_; }

  bool is_gaussian() const { return std::holds_alternative<GaussianFlux>(flux_); }
  std::span<const double> stamps() const { return stamps_; }
  const ObservationWindow& window() const { return window_; }
  double dt() const { return dt_; }
  // Characteristic pulse width used for step sizes.
  double width() const;

  kernels::LikelihoodTerms evaluate(double tau) const;

 private:
  LikelihoodContext() = default;
  void finish(const FluxModel& floor_model);

  std::variant<GaussianFlux, TabulatedFlux> flux_;
  std::vector<double> stamps_;
  std::vector<double> floor_;
  ObservationWindow window_;
  double dt_ = 1.0 / 256.0;
  double tau0_ = 0.0;
};

double log_likelihood(const LikelihoodContext& ctx, double tau);
double score(const LikelihoodContext& ctx, double tau);

struct MlEstimate {
  double tau_hat = 0.0;
  Solver solver = Solver::search;
  std::size_t iterations = 0;
  bool converged = false;
  bool multimodal = false;  // several near-equal modes; the one nearest tau0 was kept
  bool fell_back = false;   // zero solver found no sign change and used the search
  bool empty = false;       // no stamps; tau_hat is the initial guess
};

struct SolverOptions {
  std::size_t max_iterations = 200;
  // Stop once steps fall below dt * tolerance_fraction.
  double tolerance_fraction = 0.1;
  // Local maxima within this log-likelihood gap of the best count as ties.
  double tie_gap = 0.5;
};

MlEstimate estimate_gradient(const LikelihoodContext& ctx, const SolverOptions& opt = {});
MlEstimate estimate_search(const LikelihoodContext& ctx, const SolverOptions& opt = {});
MlEstimate estimate_zero(const LikelihoodContext& ctx, const SolverOptions& opt = {});
MlEstimate estimate(const LikelihoodContext& ctx, Solver solver, const SolverOptions& opt = {});

struct ScoreStatistics {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t trials = 0;
};

// Monte Carlo moments of dL/dtau at the true delay for a Gaussian pulse.
ScoreStatistics score_statistics(const FluxModel& model, double tau0, const ObservationWindow& window,
                                 std::size_t trials, std::uint64_t seed);

struct BootstrapResult {
  double variance = 0.0;
  std::size_t resamples = 0;
  std::size_t k = 0;
};

// Variance of the mean of K stamps drawn with replacement.
BootstrapResult bootstrap_variance(std::span<const double> stamps, std::size_t k, std::size_t resamples,
                                   RngStream& rng);

}  // namespace photon_limits
