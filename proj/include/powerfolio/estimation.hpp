#pragma once
// Plain sample-moment estimation of market parameters from a table of
// simple per-period returns.

#include <string>
#include <vector>

#include "powerfolio/market.hpp"

namespace powerfolio {

/// T_obs x N simple per-period returns with a header row of asset names.
/// dt is the period length in years (1/12 for monthly data).
struct ReturnsTable {
  double dt = 0.0;
  std::vector<std::string> names;
  Matrix returns;

  Eigen::Index n_assets() const { return returns.cols(); }
  Eigen::Index n_periods() const { return returns.rows(); }
};

/// Parse a comma-separated table: header row of names, one row per period,
/// decimal-point numbers, no missing cells. Throws SchemaError with the line
/// (and column where meaningful) on malformed input.
ReturnsTable load_returns_csv(const std::string& path, double dt);

void save_returns_csv(const ReturnsTable& table, const std::string& path);

/// Annualized sample moments: drift = column means / dt, covariance = sample
/// covariance (denominator T_obs - 1) / dt. The result must pass
/// validate_market; otherwise ValidationFailure carries the report (a
/// constant column shows up as a singular covariance). Requires
/// T_obs >= N + 2 rows.
MarketModel estimate_from_returns(const ReturnsTable& table, double risk_free);

}  // namespace powerfolio
