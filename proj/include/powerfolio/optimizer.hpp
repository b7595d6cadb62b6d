#pragma once
// Closed-form maximizers of the quadratic objective H and an independent
// equality-constrained KKT solver that adjudicates them. For the
// beta-constrained problems several closed-form variants circulate, obtained
// along different algebraic routes; each is evaluated against the KKT
// solution and the match is recorded in the solution diagnostics. The KKT
// result is the one returned.

#include <cstdint>
#include <string>
#include <vector>

#include "powerfolio/objective.hpp"

namespace powerfolio {

/// Two vectors agree "to closed-form accuracy" below this infinity-norm gap.
inline constexpr double kFormulaMatchTol = 1e-8;
/// Equality constraints must be met to this residual.
inline constexpr double kConstraintTol = 1e-10;
/// KKT systems with a larger condition estimate are rejected: past this
/// point the match tolerances above are not meaningful in double precision.
inline constexpr double kKktConditionLimit = 1e12;

/// Equality constraint on market exposure.
///   none:            unconstrained
///   investable_beta: decision vector (pi_0, q), constraint pi_0 + b.q = beta0
///   vector_beta:     decision vector pi,        constraint b.pi = beta0
struct ConstraintSpec {
  enum class Kind { none, investable_beta, vector_beta };

  Kind kind = Kind::none;
  double beta0 = 0.0;
  Vector betas;

  static ConstraintSpec none();
  static ConstraintSpec investable(double beta0, Vector betas);
  static ConstraintSpec vector(double beta0, Vector betas);

  bool constrained() const { return kind != Kind::none; }
  /// Gradient row of the constraint over an n-dimensional decision vector.
  Vector row(Eigen::Index n) const;
};

/// One closed-form candidate compared against the KKT solution.
struct FormulaCheck {
  std::string name;        ///< stable identifier, e.g. "gamma_form"
  std::string expression;  ///< the formula, human-readable
  Vector value;            ///< candidate decision vector
  double max_abs_diff = 0.0;
  bool matches_oracle = false;
};

struct Solution {
  /// Optimal weights. Investable beta-constrained case: index 0 is the
  /// benchmark weight pi_0, the rest are the risky weights q.
  Portfolio portfolio;
  double objective_value = 0.0;
  /// Infinity norm of grad H, projected onto the constraint tangent space
  /// when constrained.
  double gradient_norm = 0.0;
  double constraint_residual = 0.0;
  double lagrange_multiplier = 0.0;
  std::vector<FormulaCheck> diagnostics;
};

/// Unconstrained maximizer of H:
///   pi* = (1/gamma) A^{-1} (g - r 1) - (1/gamma) sum_j gamma_j rho_j.
/// With no benchmarks this is the classic constant-weight growth-optimal
/// solution for power utility. Throws ConditioningError when the smallest
/// covariance pivot falls below the ellipticity floor.
Solution merton_optimal(const ObjectiveContext& ctx);

/// Convenience for the single benchmark rho_1 = theta e (a fraction theta in
/// asset 1, the rest in cash): pi* = classic solution - (gamma_1 theta /
/// gamma) e. Requires the context to hold exactly that benchmark.
Solution merton_optimal_60_40(const ObjectiveContext& ctx, double theta);

/// Maximize H over (pi_0, q) for the investable-benchmark market subject to
/// pi_0 + b.q = beta0. Solved via the KKT system; the diagnostics evaluate
/// the closed-form candidates
///   sigma2_form:     q = sigma^2   C^{-1} (v - v0 b)
///   inv_sigma2_form: q = sigma^-2  C^{-1} (v - v0 b)
///   gamma_form:      q = gamma^-1  C^{-1} (v0 b - v)
/// where (v0, v) = A sum_j gamma_j rho_j over the assembled market.
Solution capm_constrained_investable(const CapmModel& c,
                                     const UtilityParams& params,
                                     const BenchmarkSet& benchmarks,
                                     double beta0);

/// Maximize H over pi for the non-investable-benchmark market subject to
/// b.pi = beta0. Diagnostics evaluate
///   beta_ratio_form:         pi = beta0 C^{-1} b / (b^T C^{-1} b)
///   benchmark_adjusted_form: pi = -sum_i (gamma_i/gamma) rho_i
///        + [beta0 + sum_i (gamma_i/gamma) rho_i.b] C^{-1} b / (b^T C^{-1} b)
/// The first drops the benchmark terms; the two coincide exactly when
/// sum_i gamma_i rho_i is proportional to C^{-1} b (in particular when k=0).
Solution capm_constrained_noninvestable(const CapmModel& c,
                                        const UtilityParams& params,
                                        const BenchmarkSet& benchmarks,
                                        double beta0);

/// Independent maximizer of H under at most one equality constraint. The
/// quadratic is recovered purely from gradient evaluations (no closed-form
/// expression is reused), the symmetric KKT system is solved by full-pivot
/// LU, and the condition number is estimated by SVD. Throws
/// ConditioningError past kKktConditionLimit.
Solution kkt_oracle(const ObjectiveContext& ctx,
                    const ConstraintSpec& constraint);

/// Random feasible perturbations around a candidate: counts directions d
/// with H(candidate + d) > H(candidate). Zero violations is the expected
/// outcome at the maximizer. Magnitudes are drawn from [1e-3, 1]; draws come
/// from a counter-based stream, so results do not depend on scheduling.
struct PerturbationReport {
  int samples = 0;
  int violations = 0;
  double worst_gain = 0.0;  ///< max over d of H(candidate + d) - H(candidate)
};

PerturbationReport perturbation_check(const ObjectiveContext& ctx,
                                      const ConstraintSpec& constraint,
                                      const Portfolio& candidate,
                                      int samples = 1000,
                                      std::uint64_t seed = 2024);

}  // namespace powerfolio
