#pragma once
// Monte Carlo engine for terminal log-wealth under constant coefficients.
// For a constant portfolio p the log-wealth increment is
//   d ln V = [p.(g - r 1) + r - A p.p / 2] dt + p . (Sigma dW),
// so the terminal value is Gaussian and one draw per path reproduces it
// exactly (scheme exact_log). The euler_log scheme accumulates the same
// increment over `steps` sub-intervals and exists as an independent check of
// the drift correction; with one step it coincides with exact_log bit for
// bit. All portfolios and benchmarks share the same driving noise per path
// (common random numbers). Estimates check the identity E[U] = exp(T H(p)).

#include <cstdint>
#include <vector>

#include "powerfolio/objective.hpp"

namespace powerfolio {

enum class Scheme { exact_log, euler_log };

struct SimConfig {
  double horizon = 1.0;          ///< T in years
  int steps = 1;                 ///< time steps per path (euler_log)
  std::int64_t paths = 100000;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::exact_log;
};

/// Terminal log-wealth per path: portfolio columns first, then one column
/// per benchmark.
struct TerminalSamples {
  Matrix log_wealth;  ///< paths x (n_portfolios + n_benchmarks)
  Eigen::Index n_portfolios = 0;
  Eigen::Index n_benchmarks = 0;
  double horizon = 0.0;
};

/// Simulate every portfolio and benchmark on shared per-path noise. Draws
/// for path p come from the counter-based stream (seed, p), so results are
/// bit-identical for any worker count. Throws ValidationFailure on an
/// invalid model.
TerminalSamples simulate_terminal(const MarketModel& model,
                                  const std::vector<Portfolio>& portfolios,
                                  const BenchmarkSet& benchmarks,
                                  const SimConfig& cfg, int workers = 1);

struct SimResult {
  double mean_utility = 0.0;
  double stderr_ = 0.0;   ///< standard error of the mean
  double analytic = 0.0;  ///< exp(T H(p))
  double z_score = 0.0;   ///< (mean - analytic) / stderr
};

/// Mean and standard error of U = exp((1-gamma) ln V - sum_j gamma_j ln V_j)
/// for one simulated portfolio column, against the analytic reference.
/// Reductions use fixed-tree pairwise summation (bit-stable).
SimResult estimate_expected_utility(const TerminalSamples& samples,
                                    Eigen::Index portfolio_index,
                                    const Portfolio& portfolio,
                                    const ObjectiveContext& ctx);

/// Per-portfolio breakdown over all simulated portfolio columns.
std::vector<SimResult> estimate_expected_utility(
    const TerminalSamples& samples, const std::vector<Portfolio>& portfolios,
    const ObjectiveContext& ctx);

/// Compare a candidate against random perturbations of itself, analytically
/// (through H) and by common-random-number Monte Carlo.
struct OptimalityReport {
  int n_perturbations = 0;
  /// Directions with H(candidate + d) > H(candidate); 0 at the maximizer.
  int analytic_violations = 0;
  /// Directions whose Monte Carlo utility beats the candidate by more than
  /// 3 standard errors of the pathwise difference.
  int mc_violations = 0;
  double max_objective_gain = 0.0;
};

OptimalityReport verify_optimality(const ObjectiveContext& ctx,
                                   const Portfolio& candidate,
                                   const SimConfig& cfg, int n_perturbations,
                                   double radius, int workers = 1);

}  // namespace powerfolio
