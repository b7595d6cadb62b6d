#include <cmath>
#include <random>

#include "doctest.h"
#include "powerfolio/objective.hpp"
#include "test_util.hpp"

using namespace powerfolio;
using powerfolio::testing::random_instance;

namespace {

MarketModel single_asset_market() {
  Vector drift(1);
  drift << 0.08;
  Matrix cov(1, 1);
  cov << 0.04;
  return MarketModel(drift, cov, 0.02);
}

}  // namespace

TEST_CASE("power utility hand values") {
  CHECK(power_utility(1.0, 0.0) == 0.0);
  CHECK(power_utility(4.0, 0.5) == doctest::Approx(4.0));
  // x^g/g diverges as g -> 0; the shifted family (x^g - 1)/g is the one that
  // tends to ln x, so continuity is asserted for it
  CHECK(power_utility(2.0, 1e-8) - 1e8 ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("power utility domain and parameter errors") {
  CHECK_THROWS_AS(power_utility(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(power_utility(-1.0, 0.5), DomainError);
  CHECK_THROWS_AS(power_utility(1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(power_utility(1.0, 2.0), ParameterError);
}

TEST_CASE("combined utility hand values") {
  CHECK(combined_utility(4.0, {}, UtilityParams(0.5, {})) ==
        doctest::Approx(2.0));

  const std::vector<double> one_bench{2.0};
  CHECK(combined_utility(2.0, one_bench, UtilityParams(0.5, {0.5})) ==
        doctest::Approx(1.0));

  const std::vector<double> bench{2.0};
  CHECK(combined_utility(3.0, bench, UtilityParams(0.5, {0.25})) ==
        doctest::Approx(
            std::exp(0.5 * std::log(3.0) - 0.25 * std::log(2.0))));
}

TEST_CASE("combined utility with no benchmarks is the pure power term") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> wealth(0.2, 5.0);
  std::uniform_real_distribution<double> gammas(0.05, 0.95);
  for (int i = 0; i < 50; ++i) {
    const double v = wealth(rng);
    const double g = gammas(rng);
    CHECK(combined_utility(v, {}, UtilityParams(g, {})) ==
          std::exp((1.0 - g) * std::log(v)));
  }
}

TEST_CASE("combined utility rejects nonpositive wealth and mismatched k") {
  const UtilityParams params(0.5, {0.2});
  const std::vector<double> bench{1.0};
  CHECK_THROWS_AS(combined_utility(0.0, bench, params), DomainError);
  const std::vector<double> bad_bench{0.0};
  CHECK_THROWS_AS(combined_utility(1.0, bad_bench, params), DomainError);
  CHECK_THROWS_AS(combined_utility(1.0, {}, params), DimensionError);
}

TEST_CASE("utility params enforce the open interval on gamma") {
  CHECK_THROWS_AS(UtilityParams(0.0, {}), ParameterError);
  CHECK_THROWS_AS(UtilityParams(1.0, {}), ParameterError);
  CHECK_THROWS_AS(UtilityParams(1.2, {}), ParameterError);
  CHECK_THROWS_AS(UtilityParams(-0.5, {}), ParameterError);
  CHECK_NOTHROW(UtilityParams(0.5, {-0.25}));
  CHECK(validate_utility(UtilityParams(0.5, {-0.25})).size() == 1);
  CHECK(validate_utility(UtilityParams(0.5, {0.25})).empty());
}

TEST_CASE("objective of the all-cash portfolio") {
  const ObjectiveContext ctx(single_asset_market(), UtilityParams(0.5, {}),
                             BenchmarkSet{});
  const auto value = objective_components(Portfolio(Vector::Zero(1)), ctx);
  CHECK(value.F == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(value.G == 0.0);
  CHECK(value.H == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("objective hand value on the single-asset market") {
  const ObjectiveContext ctx(single_asset_market(), UtilityParams(0.5, {}),
                             BenchmarkSet{});
  Vector w(1);
  w << 1.0;
  const auto value = objective_components(Portfolio(w), ctx);
  CHECK(value.F == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(value.G == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(value.H == doctest::Approx(0.035).epsilon(1e-14));
}

TEST_CASE("G vanishes exactly on the kernel portfolio") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(rng);
    const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);
    const Vector kernel =
        ctx.benchmark_mix() / (1.0 - inst.params.gamma);
    const auto value = objective_components(Portfolio(kernel), ctx);
    CHECK(std::abs(value.G) <= 1e-24);
  }
}

TEST_CASE("G is nonnegative and positive away from the kernel") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng);
    const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);
    Vector p(inst.model.n_assets());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = normal(rng);
    const auto value = objective_components(Portfolio(p), ctx);
    CHECK(value.G >= 0.0);
    const Vector v = (1.0 - inst.params.gamma) * p - ctx.benchmark_mix();
    if (v.norm() > 1e-6) CHECK(value.G > 0.0);
  }
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng);
    const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);
    Vector p(inst.model.n_assets());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = normal(rng);

    const Vector analytic = grad_H(Portfolio(p), ctx);
    const Vector numeric = powerfolio::testing::finite_difference_gradient(
        ctx, p);
    const double err = (analytic - numeric).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-6 * (1.0 + analytic.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("second differences reproduce the constant curvature") {
  std::mt19937_64 rng(25);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng);
    const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);
    const Eigen::Index n = inst.model.n_assets();
    Vector p(n), d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = normal(rng);
      d(i) = normal(rng);
    }
    if (d.norm() < 0.1) d.setOnes();

    const double lhs = objective_H(Portfolio(p + d), ctx) -
                       2.0 * objective_H(Portfolio(p), ctx) +
                       objective_H(Portfolio(p - d), ctx);
    const double gamma = inst.params.gamma;
    const double rhs =
        -gamma * (1.0 - gamma) * (inst.model.covariance * d).dot(d);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(rhs));
  }
}

TEST_CASE("unit-step gradient differences equal the Hessian columns") {
  std::mt19937_64 rng(26);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng);
    const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);
    const Eigen::Index n = inst.model.n_assets();
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = normal(rng);
    const double gamma = inst.params.gamma;

    for (Eigen::Index i = 0; i < n; ++i) {
      Vector unit = Vector::Zero(n);
      unit(i) = 1.0;
      const Vector diff = grad_H(Portfolio(p + unit), ctx) -
                          grad_H(Portfolio(p), ctx);
      const Vector expected =
          -gamma * (1.0 - gamma) * inst.model.covariance.col(i);
      CHECK((diff - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("context precomputations equal their definitions") {
  std::mt19937_64 rng(27);
  const auto inst = random_instance(rng, 6, 3);
  const ObjectiveContext ctx(inst.model, inst.params, inst.benchmarks);

  Vector mix = Vector::Zero(inst.model.n_assets());
  for (std::size_t j = 0; j < inst.benchmarks.count(); ++j) {
    mix += inst.params.gammas[j] * inst.benchmarks.weights[j];
  }
  CHECK((ctx.benchmark_mix() - mix).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ctx.mix_covariance() - inst.model.covariance * mix)
            .cwiseAbs()
            .maxCoeff() <= 1e-15 * (1.0 + mix.cwiseAbs().maxCoeff()));

  double constant = 0.0;
  const Vector premium =
      inst.model.drift -
      inst.model.risk_free * Vector::Ones(inst.model.n_assets());
  for (std::size_t j = 0; j < inst.benchmarks.count(); ++j) {
    const Vector& rho = inst.benchmarks.weights[j];
    constant -= inst.params.gammas[j] *
                (rho.dot(premium) + inst.model.risk_free -
                 0.5 * (inst.model.covariance * rho).dot(rho));
  }
  CHECK(ctx.benchmark_constant() ==
        doctest::Approx(constant).epsilon(1e-12));
}

TEST_CASE("context rejects inconsistent dimensions") {
  const MarketModel market = single_asset_market();
  CHECK_THROWS_AS(
      ObjectiveContext(market, UtilityParams(0.5, {0.2}), BenchmarkSet{}),
      DimensionError);
  std::vector<Vector> wide{Vector::Zero(2)};
  CHECK_THROWS_AS(ObjectiveContext(market, UtilityParams(0.5, {0.2}),
                                   BenchmarkSet(wide)),
                  DimensionError);
}

TEST_CASE("portfolio beta hand values") {
  Vector betas(2);
  betas << 1.2, 0.8;

  Vector investable(3);
  investable << 0.7, 0.0, 0.0;
  CHECK(portfolio_beta(investable, betas, true) == doctest::Approx(0.7));

  Vector ones_beta(3);
  ones_beta << 1.0, 1.0, 1.0;
  Vector weights(3);
  weights << 0.2, 0.3, 0.1;
  CHECK(portfolio_beta(weights, ones_beta, false) == doctest::Approx(0.6));

  std::mt19937_64 rng(28);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(2), b(2);
  for (int i = 0; i < 2; ++i) {
    w(i) = normal(rng);
    b(i) = normal(rng);
  }
  CHECK(portfolio_beta(w, b, false) ==
        doctest::Approx(w(0) * b(0) + w(1) * b(1)));
  CHECK_THROWS_AS(portfolio_beta(w, betas.head(1), false), DimensionError);
}

TEST_CASE("portfolio cash weight is the remainder") {
  Vector w(2);
  w << 0.6, 0.3;
  CHECK(Portfolio(w).cash() == doctest::Approx(0.1));
  Vector short_pos(1);
  short_pos << 3.0;
  CHECK(Portfolio(short_pos).cash() == doctest::Approx(-2.0));
}
