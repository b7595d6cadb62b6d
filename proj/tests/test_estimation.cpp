#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "powerfolio/estimation.hpp"
#include "powerfolio/simulator.hpp"
#include "test_util.hpp"

using namespace powerfolio;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "powerfolio_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Per-period simple returns drawn from the model, one row per period. Each
// asset is the single-asset portfolio e_i, so the rows are iid draws of the
// per-period joint return distribution.
ReturnsTable synthetic_returns(const MarketModel& model, Eigen::Index rows,
                               double dt, std::uint64_t seed) {
  std::vector<Portfolio> assets;
  for (Eigen::Index i = 0; i < model.n_assets(); ++i) {
    Vector unit = Vector::Zero(model.n_assets());
    unit(i) = 1.0;
    assets.emplace_back(unit);
  }
  SimConfig cfg;
  cfg.horizon = dt;
  cfg.paths = rows;
  cfg.seed = seed;
  const TerminalSamples samples =
      simulate_terminal(model, assets, BenchmarkSet{}, cfg);

  ReturnsTable table;
  table.dt = dt;
  table.returns = (samples.log_wealth.array().exp() - 1.0).matrix();
  for (Eigen::Index i = 0; i < model.n_assets(); ++i) {
    table.names.push_back("asset_" + std::to_string(i + 1));
  }
  return table;
}

}  // namespace

TEST_CASE("two identical columns cannot be estimated") {
  ReturnsTable table;
  table.dt = 1.0 / 12.0;
  table.names = {"a", "b"};
  table.returns.resize(12, 2);
  std::mt19937_64 rng(61);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (int r = 0; r < 12; ++r) {
    const double x = normal(rng);
    table.returns(r, 0) = x;
    table.returns(r, 1) = x;
  }
  try {
    estimate_from_returns(table, 0.02);
    FAIL("expected ValidationFailure");
  } catch (const ValidationFailure& e) {
    CHECK_FALSE(e.report().ok);
  }
}

TEST_CASE("a constant return column annualizes but cannot be estimated") {
  ReturnsTable table;
  table.dt = 1.0 / 12.0;
  table.names = {"flat"};
  table.returns = Matrix::Constant(24, 1, 0.01);
  CHECK(table.returns.col(0).mean() / table.dt ==
        doctest::Approx(0.12).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_from_returns(table, 0.0), ValidationFailure);
}

TEST_CASE("too few rows fail with an explicit finding") {
  ReturnsTable table;
  table.dt = 1.0 / 12.0;
  table.names = {"a", "b", "c"};
  table.returns = Matrix::Random(4, 3);
  try {
    estimate_from_returns(table, 0.0);
    FAIL("expected ValidationFailure");
  } catch (const ValidationFailure& e) {
    CHECK(e.report().has("insufficient_rows"));
  }
}

TEST_CASE("moment estimation recovers simulated parameters") {
  Vector drift(2);
  drift << 0.07, 0.10;
  Matrix cov(2, 2);
  cov << 0.08, 0.02, 0.02, 0.12;
  const MarketModel truth(drift, cov, 0.02);
  const double dt = 1.0 / 12.0;
  const Eigen::Index rows = 6000;
  const ReturnsTable table = synthetic_returns(truth, rows, dt, 2028);

  const MarketModel estimated = estimate_from_returns(table, truth.risk_free);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double band =
        3.0 * std::sqrt(truth.covariance(i, i) / (rows * dt));
    CHECK(std::abs(estimated.drift(i) - truth.drift(i)) <= band);
  }
  const double frobenius_gap = (estimated.covariance - truth.covariance).norm();
  CHECK(frobenius_gap <= 0.10 * truth.covariance.norm());
}

TEST_CASE("returns CSV round trip") {
  ReturnsTable table;
  table.dt = 0.25;
  table.names = {"eq", "bond"};
  table.returns.resize(3, 2);
  table.returns << 0.01, -0.002, 0.03, 0.001, -0.015, 0.0025;
  const auto path = temp_file("roundtrip.csv");
  save_returns_csv(table, path.string());

  const ReturnsTable loaded = load_returns_csv(path.string(), table.dt);
  CHECK(loaded.names == table.names);
  CHECK((loaded.returns - table.returns).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("CSV parsing errors carry the offending location") {
  const auto path = temp_file("bad.csv");

  write_file(path, "a,b\n0.01,0.02\n0.01\n");
  CHECK_THROWS_WITH_AS(load_returns_csv(path.string(), 1.0),
                       doctest::Contains("line 3"), SchemaError);

  write_file(path, "a,b\n0.01,\n");
  try {
    load_returns_csv(path.string(), 1.0);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("missing cell") != std::string::npos);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }

  write_file(path, "a,b\n0.01,not_a_number\n");
  CHECK_THROWS_AS(load_returns_csv(path.string(), 1.0), SchemaError);

  write_file(path, "a,b\n");
  CHECK_THROWS_AS(load_returns_csv(path.string(), 1.0), SchemaError);

  CHECK_THROWS_AS(load_returns_csv("/nonexistent/nowhere.csv", 1.0),
                  SchemaError);
  write_file(path, "a,b\n0.01,0.02\n");
  CHECK_THROWS_AS(load_returns_csv(path.string(), 0.0), ParameterError);
}
