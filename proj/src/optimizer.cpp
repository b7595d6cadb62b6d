#include "powerfolio/optimizer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "powerfolio/rng.hpp"

namespace powerfolio {

namespace {

double inf_norm(const Vector& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Gradient norm projected onto the constraint tangent space (plain norm when
// unconstrained), plus the constraint residual.
void fill_stationarity(const ObjectiveContext& ctx,
                       const ConstraintSpec& constraint, Solution& s) {
  const Vector g = grad_H(s.portfolio, ctx);
  if (!constraint.constrained()) {
    s.gradient_norm = inf_norm(g);
    s.constraint_residual = 0.0;
    return;
  }
  const Vector a = constraint.row(s.portfolio.size());
  const Vector projected = g - (g.dot(a) / a.squaredNorm()) * a;
  s.gradient_norm = inf_norm(projected);
  s.constraint_residual = a.dot(s.portfolio.weights) - constraint.beta0;
}

FormulaCheck make_check(std::string name, std::string expression, Vector value,
                        const Vector& oracle_value) {
  FormulaCheck check;
  check.name = std::move(name);
  check.expression = std::move(expression);
  check.value = std::move(value);
  check.max_abs_diff = inf_norm(check.value - oracle_value);
  check.matches_oracle = check.max_abs_diff <= kFormulaMatchTol;
  return check;
}

}  // namespace

ConstraintSpec ConstraintSpec::none() { return ConstraintSpec{}; }

ConstraintSpec ConstraintSpec::investable(double beta0, Vector betas) {
  if (!std::isfinite(beta0)) throw ParameterError("beta0 must be finite");
  ConstraintSpec c;
  c.kind = Kind::investable_beta;
  c.beta0 = beta0;
  c.betas = std::move(betas);
  return c;
}

ConstraintSpec ConstraintSpec::vector(double beta0, Vector betas) {
  if (!std::isfinite(beta0)) throw ParameterError("beta0 must be finite");
  if (betas.size() == 0 || betas.cwiseAbs().maxCoeff() == 0.0) {
    throw ParameterError(
        "vector beta constraint requires a nonzero beta vector");
  }
  ConstraintSpec c;
  c.kind = Kind::vector_beta;
  c.beta0 = beta0;
  c.betas = std::move(betas);
  return c;
}

Vector ConstraintSpec::row(Eigen::Index n) const {
  switch (kind) {
    case Kind::none:
      throw ParameterError("unconstrained spec has no constraint row");
    case Kind::investable_beta: {
      if (n != betas.size() + 1) {
        throw DimensionError(
            "investable constraint row needs one benchmark slot plus one per "
            "asset");
      }
      Vector a(n);
      a(0) = 1.0;
      a.tail(betas.size()) = betas;
      return a;
    }
    case Kind::vector_beta: {
      if (n != betas.size()) {
        throw DimensionError("constraint betas must match the decision length");
      }
      return betas;
    }
  }
  throw ParameterError("unknown constraint kind");
}

Solution merton_optimal(const ObjectiveContext& ctx) {
  const MarketModel& m = ctx.model();
  PivotedCholesky chol = cholesky_with_pivots(m.covariance);
  if (!chol.ok() || chol.min_pivot() < kDefaultEllipticityFloor) {
    std::ostringstream os;
    os << "covariance is too close to singular for the closed form "
       << "(smallest pivot " << chol.min_pivot() << ")";
    throw ConditioningError(os.str(),
                            chol.ok() ? -1 : static_cast<long>(chol.failed_at));
  }
  const CholeskyFactor factor{std::move(chol.lower)};
  const double gamma = ctx.params().gamma;

  Vector weights =
      cholesky_solve(factor, ctx.premium()) / gamma - ctx.benchmark_mix() / gamma;

  Solution s;
  s.portfolio = Portfolio(std::move(weights));
  s.objective_value = objective_H(s.portfolio, ctx);
  fill_stationarity(ctx, ConstraintSpec::none(), s);
  return s;
}

Solution merton_optimal_60_40(const ObjectiveContext& ctx, double theta) {
  if (ctx.benchmarks().count() != 1) {
    throw ParameterError(
        "the single-index convenience requires exactly one benchmark");
  }
  Vector expected = Vector::Zero(ctx.n_assets());
  expected(0) = theta;
  if (inf_norm(ctx.benchmarks().weights.front() - expected) >
      1e-15 * std::max(1.0, std::abs(theta))) {
    throw ParameterError(
        "the benchmark must hold the fraction theta in asset 1 and the rest "
        "in cash");
  }
  return merton_optimal(ctx);
}

Solution kkt_oracle(const ObjectiveContext& ctx,
                    const ConstraintSpec& constraint) {
  const Eigen::Index n = ctx.n_assets();
  const Eigen::Index c = constraint.constrained() ? 1 : 0;

  // Recover H(p) = H(0) + w.p - p^T Q p / 2 from gradient evaluations only:
  // w = grad H(0), Q e_j = grad H(0) - grad H(e_j).
  const Vector w = grad_H(Portfolio(Vector::Zero(n)), ctx);
  Matrix q(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector unit = Vector::Zero(n);
    unit(j) = 1.0;
    q.col(j) = w - grad_H(Portfolio(std::move(unit)), ctx);
  }
  q = ((q + q.transpose()) / 2.0).eval();

  Matrix kkt = Matrix::Zero(n + c, n + c);
  Vector rhs(n + c);
  kkt.topLeftCorner(n, n) = q;
  rhs.head(n) = w;
  if (c == 1) {
    const Vector a = constraint.row(n);
    kkt.block(0, n, n, 1) = -a;
    kkt.block(n, 0, 1, n) = -a.transpose();
    rhs(n) = -constraint.beta0;
  }

  Eigen::JacobiSVD<Matrix> svd(kkt);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  const double condition =
      smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!(condition < kKktConditionLimit)) {
    std::ostringstream os;
    os << "KKT system condition estimate " << condition << " exceeds "
       << kKktConditionLimit;
    throw ConditioningError(os.str());
  }

  const Vector x = kkt.fullPivLu().solve(rhs);

  Solution s;
  s.portfolio = Portfolio(x.head(n));
  s.objective_value = objective_H(s.portfolio, ctx);
  s.lagrange_multiplier = c == 1 ? x(n) : 0.0;
  fill_stationarity(ctx, constraint, s);
  return s;
}

Solution capm_constrained_investable(const CapmModel& c,
                                     const UtilityParams& params,
                                     const BenchmarkSet& benchmarks,
                                     double beta0) {
  const MarketModel assembled = assemble_capm_investable(c);
  const Eigen::Index n = c.n_assets();
  const ObjectiveContext ctx(assembled, params, benchmarks);
  const ConstraintSpec constraint = ConstraintSpec::investable(beta0, c.betas);

  Solution s = kkt_oracle(ctx, constraint);

  // Candidates for the risky weights q; pi_0 = beta0 - b.q in every case.
  const Vector u = assembled.covariance * ctx.benchmark_mix();
  const double v0 = u(0);
  const Vector v = u.tail(n);
  const CholeskyFactor residual_factor = cholesky_factor(c.residual_cov);
  const Vector forward = cholesky_solve(residual_factor, v - v0 * c.betas);
  const double s2 = c.sigma * c.sigma;

  const auto full = [&](const Vector& risky) {
    Vector decision(n + 1);
    decision(0) = beta0 - c.betas.dot(risky);
    decision.tail(n) = risky;
    return decision;
  };

  s.diagnostics.push_back(make_check("sigma2_form",
                                     "q = sigma^2 C^{-1} (v - v0 b)",
                                     full(s2 * forward), s.portfolio.weights));
  s.diagnostics.push_back(
      make_check("inv_sigma2_form", "q = sigma^{-2} C^{-1} (v - v0 b)",
                 full(forward / s2), s.portfolio.weights));
  s.diagnostics.push_back(
      make_check("gamma_form", "q = gamma^{-1} C^{-1} (v0 b - v)",
                 full(-forward / params.gamma), s.portfolio.weights));
  return s;
}

Solution capm_constrained_noninvestable(const CapmModel& c,
                                        const UtilityParams& params,
                                        const BenchmarkSet& benchmarks,
                                        double beta0) {
  const MarketModel market = assemble_capm_noninvestable(c);
  const ObjectiveContext ctx(market, params, benchmarks);
  const ConstraintSpec constraint = ConstraintSpec::vector(beta0, c.betas);

  Solution s = kkt_oracle(ctx, constraint);

  const CholeskyFactor residual_factor = cholesky_factor(c.residual_cov);
  const Vector cinv_b = cholesky_solve(residual_factor, c.betas);
  const double quad = c.betas.dot(cinv_b);

  const Vector ratio = (beta0 / quad) * cinv_b;
  const Vector mix_over_gamma = ctx.benchmark_mix() / params.gamma;
  const Vector adjusted =
      -mix_over_gamma +
      ((beta0 + mix_over_gamma.dot(c.betas)) / quad) * cinv_b;

  s.diagnostics.push_back(make_check("beta_ratio_form",
                                     "pi = beta0 C^{-1} b / (b^T C^{-1} b)",
                                     ratio, s.portfolio.weights));
  s.diagnostics.push_back(make_check(
      "benchmark_adjusted_form",
      "pi = -sum_i (gamma_i/gamma) rho_i + [beta0 + sum_i (gamma_i/gamma) "
      "rho_i.b] C^{-1} b / (b^T C^{-1} b)",
      adjusted, s.portfolio.weights));
  return s;
}

PerturbationReport perturbation_check(const ObjectiveContext& ctx,
                                      const ConstraintSpec& constraint,
                                      const Portfolio& candidate, int samples,
                                      std::uint64_t seed) {
  if (samples < 0) throw ParameterError("sample count must be non-negative");
  const Eigen::Index n = ctx.n_assets();
  CounterStream stream(seed, 0);

  PerturbationReport report;
  report.samples = samples;
  report.worst_gain = -std::numeric_limits<double>::infinity();
  const double base = objective_H(candidate, ctx);

  for (int s = 0; s < samples; ++s) {
    Vector d(n);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < n; ++i) d(i) = stream.next_normal();
      if (constraint.constrained()) {
        const Vector a = constraint.row(n);
        d -= (d.dot(a) / a.squaredNorm()) * a;
      }
      norm = d.norm();
    } while (norm < 1e-12);
    const double magnitude = 1e-3 + (1.0 - 1e-3) * stream.next_uniform();
    d *= magnitude / norm;

    const double perturbed =
        objective_H(Portfolio(candidate.weights + d), ctx);
    const double gain = perturbed - base;
    if (gain > report.worst_gain) report.worst_gain = gain;
    if (perturbed > base) ++report.violations;
  }
  if (samples == 0) report.worst_gain = 0.0;
  return report;
}

}  // namespace powerfolio
