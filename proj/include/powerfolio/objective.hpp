#pragma once
// Combined power utility of absolute and benchmark-relative terminal wealth,
//   U = V(T)^{1-gamma} * prod_j V_j(T)^{-gamma_j},
// and the deterministic quadratic objective behind it. For constant
// coefficients and a constant portfolio p,
//   E[U] = exp(T * H(p)),        H = F + G/2,
//   F(p) = (1-gamma) [p.(g - r 1) + r - A p.p / 2]
//          - sum_j gamma_j [rho_j.(g - r 1) + r - A rho_j.rho_j / 2],
//   G(p) = A v(p).v(p),          v(p) = (1-gamma) p - sum_j gamma_j rho_j,
// so choosing portfolio weights reduces to maximizing H. The Hessian of H is
// -gamma (1-gamma) A: strictly concave for gamma in (0,1) and SPD A, hence a
// unique maximizer.

#include <span>
#include <vector>

#include "powerfolio/market.hpp"

namespace powerfolio {

/// Risk-aversion exponents: gamma for absolute wealth (strictly inside
/// (0, 1)), and one relative-importance exponent gamma_j per benchmark.
struct UtilityParams {
  double gamma = 0.5;
  std::vector<double> gammas;

  UtilityParams() = default;
  UtilityParams(double gamma_in, std::vector<double> gammas_in);

  std::size_t n_benchmarks() const { return gammas.size(); }
};

/// Soft checks on utility parameters. Negative relative exponents are legal
/// but flagged: they reward underperforming the benchmark.
std::vector<Finding> validate_utility(const UtilityParams& params);

/// k benchmark portfolios, each a weight vector over the risky assets
/// (the cash weight is the remainder, never stored).
struct BenchmarkSet {
  std::vector<Vector> weights;

  BenchmarkSet() = default;
  explicit BenchmarkSet(std::vector<Vector> weights_in);

  std::size_t count() const { return weights.size(); }
  /// Common length of the weight vectors (0 when empty).
  Eigen::Index n_assets() const {
    return weights.empty() ? 0 : weights.front().size();
  }
};

/// Weights over the risky assets; short positions allowed. The cash weight
/// is 1 - sum(weights), derived on demand.
struct Portfolio {
  Vector weights;

  Portfolio() = default;
  explicit Portfolio(Vector weights_in);

  Eigen::Index size() const { return weights.size(); }
  double cash() const { return 1.0 - weights.sum(); }
};

/// Immutable bundle of market, utility parameters and benchmarks with the
/// quantities every evaluation of H reuses: the premium g - r 1, the mix
/// sum_j gamma_j rho_j, its image under A, and the p-independent benchmark
/// part of F.
class ObjectiveContext {
 public:
  ObjectiveContext(MarketModel model, UtilityParams params,
                   BenchmarkSet benchmarks);

  const MarketModel& model() const { return model_; }
  const UtilityParams& params() const { return params_; }
  const BenchmarkSet& benchmarks() const { return benchmarks_; }
  Eigen::Index n_assets() const { return model_.n_assets(); }

  const Vector& premium() const { return premium_; }
  const Vector& benchmark_mix() const { return mix_; }
  const Vector& mix_covariance() const { return mix_cov_; }
  double benchmark_constant() const { return bench_constant_; }
  double constant_offset() const { return offset_; }

  /// Same context with a constant added to F. Rescaling the utility by a
  /// positive factor shifts F by a constant; maximizers must not move.
  ObjectiveContext with_constant_offset(double offset) const;

 private:
  MarketModel model_;
  UtilityParams params_;
  BenchmarkSet benchmarks_;
  Vector premium_;
  Vector mix_;
  Vector mix_cov_;
  double bench_constant_ = 0.0;
  double offset_ = 0.0;
};

/// Power utility x^gamma / gamma (ln x at gamma = 0), defined for gamma < 1.
double power_utility(double x, double gamma);

/// U = exp((1-gamma) ln V - sum_j gamma_j ln V_j), evaluated in log space so
/// long horizons cannot overflow. All wealths must be strictly positive.
double combined_utility(double wealth, std::span<const double> benchmark_wealths,
                        const UtilityParams& params);

struct ObjectiveValue {
  double F = 0.0;
  double G = 0.0;
  double H = 0.0;
};

ObjectiveValue objective_components(const Portfolio& p,
                                    const ObjectiveContext& ctx);
double objective_H(const Portfolio& p, const ObjectiveContext& ctx);

/// Analytic gradient of H:
///   grad H(p) = (1-gamma) [g - r 1 - gamma A p - A sum_j gamma_j rho_j].
Vector grad_H(const Portfolio& p, const ObjectiveContext& ctx);

/// Market exposure of a weight vector. Investable case: weights run over
/// (benchmark, assets) and the benchmark itself carries beta 1, so the
/// exposure is w_0 + b.w_1..N. Non-investable case: b.w.
double portfolio_beta(const Vector& weights, const Vector& betas,
                      bool investable);

}  // namespace powerfolio
