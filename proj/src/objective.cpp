#include "powerfolio/objective.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace powerfolio {

UtilityParams::UtilityParams(double gamma_in, std::vector<double> gammas_in)
    : gamma(gamma_in), gammas(std::move(gammas_in)) {
  if (!(gamma > 0.0) || !(gamma < 1.0)) {
    std::ostringstream os;
    os << "absolute-wealth exponent gamma must lie strictly in (0, 1), got "
       << gamma;
    throw ParameterError(os.str());
  }
  for (double g : gammas) {
    if (!std::isfinite(g)) {
      throw ParameterError("relative exponents gamma_j must be finite");
    }
  }
}

std::vector<Finding> validate_utility(const UtilityParams& params) {
  std::vector<Finding> findings;
  for (std::size_t j = 0; j < params.gammas.size(); ++j) {
    if (params.gammas[j] < 0.0) {
      std::ostringstream os;
      os << "gamma_" << (j + 1) << " = " << params.gammas[j]
         << " is negative: it rewards underperforming benchmark " << (j + 1);
      findings.push_back({Severity::warning, "negative_relative_exponent",
                          os.str()});
    }
  }
  return findings;
}

BenchmarkSet::BenchmarkSet(std::vector<Vector> weights_in)
    : weights(std::move(weights_in)) {
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j].size() != weights.front().size()) {
      throw DimensionError("benchmark weight vectors must share one length");
    }
    if (!weights[j].allFinite()) {
      std::ostringstream os;
      os << "benchmark " << (j + 1) << " has non-finite weights";
      throw DomainError(os.str());
    }
  }
}

Portfolio::Portfolio(Vector weights_in) : weights(std::move(weights_in)) {
  if (!weights.allFinite()) {
    throw DomainError("portfolio weights must be finite");
  }
}

ObjectiveContext::ObjectiveContext(MarketModel model, UtilityParams params,
                                   BenchmarkSet benchmarks)
    : model_(std::move(model)),
      params_(std::move(params)),
      benchmarks_(std::move(benchmarks)) {
  const Eigen::Index n = model_.n_assets();
  if (benchmarks_.count() != params_.gammas.size()) {
    std::ostringstream os;
    os << "benchmark count " << benchmarks_.count()
       << " does not match the number of relative exponents "
       << params_.gammas.size();
    throw DimensionError(os.str());
  }
  if (benchmarks_.count() > 0 && benchmarks_.n_assets() != n) {
    std::ostringstream os;
    os << "benchmark weights have length " << benchmarks_.n_assets()
       << " but the market has " << n << " assets";
    throw DimensionError(os.str());
  }

  premium_ = model_.drift - model_.risk_free * Vector::Ones(n);
  mix_ = Vector::Zero(n);
  bench_constant_ = 0.0;
  for (std::size_t j = 0; j < benchmarks_.count(); ++j) {
    const Vector& rho = benchmarks_.weights[j];
    const double gj = params_.gammas[j];
    mix_ += gj * rho;
    bench_constant_ -=
        gj * (rho.dot(premium_) + model_.risk_free -
              0.5 * (model_.covariance * rho).dot(rho));
  }
  mix_cov_ = model_.covariance * mix_;
}

ObjectiveContext ObjectiveContext::with_constant_offset(double offset) const {
  ObjectiveContext shifted(*this);
  shifted.offset_ = offset;
  return shifted;
}

double power_utility(double x, double gamma) {
  if (!std::isfinite(gamma) || gamma >= 1.0) {
    std::ostringstream os;
    os << "power utility exponent must be a finite value below 1, got "
       << gamma;
    throw ParameterError(os.str());
  }
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "power utility requires strictly positive wealth, got " << x;
    throw DomainError(os.str());
  }
  if (gamma == 0.0) return std::log(x);
  return std::pow(x, gamma) / gamma;
}

double combined_utility(double wealth,
                        std::span<const double> benchmark_wealths,
                        const UtilityParams& params) {
  if (benchmark_wealths.size() != params.gammas.size()) {
    throw DimensionError(
        "benchmark wealth count must match the number of relative exponents");
  }
  if (!(wealth > 0.0)) {
    throw DomainError("combined utility requires strictly positive wealth");
  }
  double exponent = (1.0 - params.gamma) * std::log(wealth);
  for (std::size_t j = 0; j < benchmark_wealths.size(); ++j) {
    if (!(benchmark_wealths[j] > 0.0)) {
      throw DomainError(
          "combined utility requires strictly positive benchmark wealth");
    }
    exponent -= params.gammas[j] * std::log(benchmark_wealths[j]);
  }
  return std::exp(exponent);
}

ObjectiveValue objective_components(const Portfolio& p,
                                    const ObjectiveContext& ctx) {
  if (p.size() != ctx.n_assets()) {
    throw DimensionError("portfolio length must match the market asset count");
  }
  const double one_minus_gamma = 1.0 - ctx.params().gamma;
  const Matrix& a = ctx.model().covariance;

  ObjectiveValue out;
  out.F = one_minus_gamma * (p.weights.dot(ctx.premium()) +
                             ctx.model().risk_free -
                             0.5 * (a * p.weights).dot(p.weights)) +
          ctx.benchmark_constant() + ctx.constant_offset();
  const Vector v = one_minus_gamma * p.weights - ctx.benchmark_mix();
  out.G = (a * v).dot(v);
  out.H = out.F + 0.5 * out.G;
  return out;
}

double objective_H(const Portfolio& p, const ObjectiveContext& ctx) {
  return objective_components(p, ctx).H;
}

Vector grad_H(const Portfolio& p, const ObjectiveContext& ctx) {
  if (p.size() != ctx.n_assets()) {
    throw DimensionError("portfolio length must match the market asset count");
  }
  const double gamma = ctx.params().gamma;
  return (1.0 - gamma) *
         (ctx.premium() - gamma * (ctx.model().covariance * p.weights) -
          ctx.mix_covariance());
}

double portfolio_beta(const Vector& weights, const Vector& betas,
                      bool investable) {
  if (investable) {
    if (weights.size() != betas.size() + 1) {
      throw DimensionError(
          "investable exposure needs one benchmark weight plus one weight per "
          "asset");
    }
    return weights(0) + betas.dot(weights.tail(betas.size()));
  }
  if (weights.size() != betas.size()) {
    throw DimensionError("weights and betas must have the same length");
  }
  return betas.dot(weights);
}

}  // namespace powerfolio
