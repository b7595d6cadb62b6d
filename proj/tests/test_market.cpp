#include <random>

#include "doctest.h"
#include "powerfolio/market.hpp"
#include "test_util.hpp"

using namespace powerfolio;

TEST_CASE("validation accepts a clean identity-covariance market") {
  Vector drift(2);
  drift << 0.08, 0.05;
  MarketModel m(drift, Matrix::Identity(2, 2), 0.02);
  const ValidationReport report = validate_market(m);
  CHECK(report.ok);
  CHECK(report.findings.empty());
  CHECK(report.min_pivot == doctest::Approx(1.0));
}

TEST_CASE("validation flags an indefinite covariance") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  MarketModel m(Vector::Zero(2), a, 0.0);
  const ValidationReport report = validate_market(m);
  CHECK_FALSE(report.ok);
  CHECK(report.has("not_positive_definite"));
  CHECK(report.min_pivot == doctest::Approx(-3.0));
}

TEST_CASE("validation flags a singular covariance via the ellipticity floor") {
  Matrix a(2, 2);
  a << 1.0, 1.0, 1.0, 1.0;
  MarketModel m(Vector::Zero(2), a, 0.0);
  const ValidationReport report = validate_market(m, 1e-12);
  CHECK_FALSE(report.ok);
  CHECK(report.has("ellipticity_floor"));
  CHECK(report.min_pivot <= 1e-12);
}

TEST_CASE("validation flags non-finite entries") {
  Vector drift(1);
  drift << std::numeric_limits<double>::quiet_NaN();
  MarketModel m(drift, Matrix::Identity(1, 1), 0.02);
  CHECK(validate_market(m).has("nonfinite_drift"));

  Matrix bad(1, 1);
  bad << std::numeric_limits<double>::infinity();
  MarketModel m2(Vector::Zero(1), bad, 0.0);
  CHECK(validate_market(m2).has("nonfinite_covariance"));
}

TEST_CASE("construction rejects mismatched shapes") {
  CHECK_THROWS_AS(MarketModel(Vector::Zero(2), Matrix::Identity(3, 3), 0.0),
                  DimensionError);
  CHECK_THROWS_AS(MarketModel(Vector::Zero(2), Matrix::Zero(2, 3), 0.0),
                  DimensionError);
  CHECK_THROWS_AS(MarketModel(Vector(), Matrix(), 0.0), DimensionError);
}

TEST_CASE("asymmetric inputs are symmetrized and reported") {
  Matrix a(2, 2);
  a << 1.0, 0.1, 0.1 + 1e-9, 1.0;
  MarketModel m(Vector::Zero(2), a, 0.0);
  CHECK(m.covariance(0, 1) == m.covariance(1, 0));
  const ValidationReport report = validate_market(m);
  CHECK(report.ok);  // warning only
  CHECK(report.has("asymmetry"));

  Matrix b(2, 2);
  b << 1.0, 0.1, 0.3, 1.0;  // far beyond the hard limit
  MarketModel m2(Vector::Zero(2), b, 0.0);
  const ValidationReport report2 = validate_market(m2);
  CHECK_FALSE(report2.ok);
  CHECK(report2.has("asymmetry"));
}

TEST_CASE("cholesky reproduces the hand-checkable 2x2 factor") {
  Matrix a(2, 2);
  a << 4.0, 2.0, 2.0, 5.0;
  const CholeskyFactor f = cholesky_factor(a);
  CHECK(f.lower(0, 0) == doctest::Approx(2.0));
  CHECK(f.lower(1, 0) == doctest::Approx(1.0));
  CHECK(f.lower(1, 1) == doctest::Approx(2.0));
  CHECK(f.lower(0, 1) == 0.0);
}

TEST_CASE("cholesky of the identity is the identity") {
  const CholeskyFactor f = cholesky_factor(Matrix::Identity(3, 3));
  CHECK((f.lower - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = powerfolio::testing::random_spd(rng, 1 + trial % 6);
    const CholeskyFactor f = cholesky_factor(a);
    const double err =
        (f.lower * f.lower.transpose() - a).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10 * a.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("cholesky is idempotent in effect") {
  std::mt19937_64 rng(12);
  const Matrix a = powerfolio::testing::random_spd(rng, 5);
  const CholeskyFactor f = cholesky_factor(a);
  const CholeskyFactor again =
      cholesky_factor(f.lower * f.lower.transpose());
  CHECK((again.lower - f.lower).cwiseAbs().maxCoeff() <=
        1e-10 * f.lower.cwiseAbs().maxCoeff());
}

TEST_CASE("cholesky failure carries the failing pivot index") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  try {
    cholesky_factor(a);
    FAIL("expected ConditioningError");
  } catch (const ConditioningError& e) {
    CHECK(e.pivot_index() == 1);
  }
}

TEST_CASE("cholesky solve inverts against the factored matrix") {
  std::mt19937_64 rng(13);
  const Matrix a = powerfolio::testing::random_spd(rng, 4);
  Vector rhs(4);
  rhs << 1.0, -2.0, 0.5, 3.0;
  const Vector x = cholesky_solve(cholesky_factor(a), rhs);
  CHECK((a * x - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("investable assembly matches the hand instance") {
  Vector betas(1);
  betas << 1.5;
  Matrix c(1, 1);
  c << 0.05;
  const CapmModel capm(0.08, 0.2, 0.02, betas, c);
  const MarketModel m = assemble_capm_investable(capm);

  REQUIRE(m.n_assets() == 2);
  CHECK(m.drift(0) == doctest::Approx(0.08));
  CHECK(m.drift(1) == doctest::Approx(0.11));
  CHECK(m.covariance(0, 0) == doctest::Approx(0.04));
  CHECK(m.covariance(0, 1) == doctest::Approx(0.06));
  CHECK(m.covariance(1, 0) == doctest::Approx(0.06));
  CHECK(m.covariance(1, 1) == doctest::Approx(0.14));
  CHECK(m.risk_free == 0.02);
  CHECK(validate_market(m).ok);
}

TEST_CASE("zero betas decouple the benchmark block") {
  Vector betas = Vector::Zero(2);
  std::mt19937_64 rng(14);
  const Matrix c = powerfolio::testing::random_spd(rng, 2);
  const CapmModel capm(0.07, 0.15, 0.01, betas, c);
  const MarketModel m = assemble_capm_investable(capm);

  CHECK(m.drift(0) == 0.07);
  CHECK((m.drift.tail(2) - 0.01 * Vector::Ones(2)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(m.covariance(0, 0) == doctest::Approx(0.15 * 0.15));
  CHECK(m.covariance.block(0, 1, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m.covariance.block(1, 1, 2, 2) - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembled risky block equals C plus the beta outer product") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const CapmModel capm = powerfolio::testing::random_capm(rng);
    const MarketModel m = assemble_capm_investable(capm);
    const Eigen::Index n = capm.n_assets();
    const double s2 = capm.sigma * capm.sigma;

    Matrix expected(n, n);  // independent recomputation, entry by entry
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        expected(i, j) =
            capm.residual_cov(i, j) + s2 * capm.betas(i) * capm.betas(j);
      }
    }
    CHECK((m.covariance.block(1, 1, n, n) - expected).cwiseAbs().maxCoeff() <=
          1e-15 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("non-investable assembly is the risky sub-block of the investable") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const CapmModel capm = powerfolio::testing::random_capm(rng);
    const Eigen::Index n = capm.n_assets();
    const MarketModel full = assemble_capm_investable(capm);
    const MarketModel sub = assemble_capm_noninvestable(capm);

    CHECK((sub.drift - full.drift.tail(n)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sub.covariance - full.covariance.block(1, 1, n, n))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("hand-checkable non-investable assembly") {
  Vector betas(1);
  betas << 1.5;
  Matrix c(1, 1);
  c << 0.05;
  const MarketModel m =
      assemble_capm_noninvestable(CapmModel(0.08, 0.2, 0.02, betas, c));
  CHECK(m.drift(0) == doctest::Approx(0.11));
  CHECK(m.covariance(0, 0) == doctest::Approx(0.14));
}

TEST_CASE("zero betas leave the non-investable market at the residuals") {
  std::mt19937_64 rng(19);
  const Matrix c = powerfolio::testing::random_spd(rng, 3);
  const MarketModel m = assemble_capm_noninvestable(
      CapmModel(0.07, 0.15, 0.01, Vector::Zero(3), c));
  CHECK((m.drift - 0.01 * Vector::Ones(3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m.covariance - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("both assemblies validate for any valid factor model") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const CapmModel capm = powerfolio::testing::random_capm(rng);
    CHECK(validate_capm(capm).ok);
    CHECK(validate_market(assemble_capm_investable(capm)).ok);
    CHECK(validate_market(assemble_capm_noninvestable(capm)).ok);
  }
}

TEST_CASE("factor validation requires mu above the risk-free rate") {
  Vector betas(1);
  betas << 1.0;
  Matrix c(1, 1);
  c << 0.05;
  const CapmModel capm(0.02, 0.2, 0.02, betas, c);
  const ValidationReport report = validate_capm(capm);
  CHECK_FALSE(report.ok);
  CHECK(report.has("benchmark_premium"));
}

TEST_CASE("assembly refuses an invalid factor model") {
  Vector betas(2);
  betas << 1.0, 0.5;
  Matrix c(2, 2);
  c << 1.0, 2.0, 2.0, 1.0;  // indefinite residual block
  const CapmModel capm(0.08, 0.2, 0.02, betas, c);
  CHECK_THROWS_AS(assemble_capm_investable(capm), ValidationFailure);
  try {
    assemble_capm_noninvestable(capm);
    FAIL("expected ValidationFailure");
  } catch (const ValidationFailure& e) {
    CHECK(e.report().has("not_positive_definite"));
  }
}

TEST_CASE("assemblies are pure: identical inputs give identical outputs") {
  std::mt19937_64 rng(18);
  const CapmModel capm = powerfolio::testing::random_capm(rng);
  const MarketModel a = assemble_capm_investable(capm);
  const MarketModel b = assemble_capm_investable(capm);
  CHECK((a.drift - b.drift).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() == 0.0);
}
