#include "powerfolio/market.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace powerfolio {

namespace {

// Relative asymmetry max|A - A^T| / max|A| (0 for the zero matrix).
double relative_asymmetry(const Matrix& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

// Shared covariance checks: asymmetry tier, finiteness, pivots.
void check_covariance(const Matrix& a, double input_asymmetry,
                      double eps_floor, const std::string& label,
                      ValidationReport& report) {
  if (!all_finite(a)) {
    report.add(Severity::error, "nonfinite_covariance",
               label + " contains non-finite entries");
    report.min_pivot = 0.0;
    return;
  }
  if (input_asymmetry > kAsymmetryErrorTol) {
    std::ostringstream os;
    os << label << " input asymmetry " << input_asymmetry
       << " exceeds the hard limit " << kAsymmetryErrorTol;
    report.add(Severity::error, "asymmetry", os.str());
  } else if (input_asymmetry > kAsymmetryWarnTol) {
    std::ostringstream os;
    os << label << " input was symmetrized; relative asymmetry "
       << input_asymmetry;
    report.add(Severity::warning, "asymmetry", os.str());
  }

  const PivotedCholesky chol = cholesky_with_pivots(a);
  report.min_pivot = chol.min_pivot();
  if (!chol.ok()) {
    const double bad = chol.pivots(chol.failed_at);
    std::ostringstream os;
    if (bad < 0.0) {
      os << label << " is not positive definite (pivot " << bad << " at index "
         << chol.failed_at << ")";
      report.add(Severity::error, "not_positive_definite", os.str());
    } else {
      os << label << " is numerically singular (pivot " << bad << " at index "
         << chol.failed_at << " below the ellipticity floor " << eps_floor
         << ")";
      report.add(Severity::error, "ellipticity_floor", os.str());
    }
    return;
  }
  if (report.min_pivot < eps_floor) {
    std::ostringstream os;
    os << label << " smallest Cholesky pivot " << report.min_pivot
       << " is below the ellipticity floor " << eps_floor;
    report.add(Severity::error, "ellipticity_floor", os.str());
  }
}

}  // namespace

MarketModel::MarketModel(Vector drift_in, Matrix covariance_in,
                         double risk_free_in)
    : drift(std::move(drift_in)),
      covariance(std::move(covariance_in)),
      risk_free(risk_free_in) {
  if (drift.size() < 1) {
    throw DimensionError("market model requires at least one risky asset");
  }
  if (covariance.rows() != covariance.cols()) {
    throw DimensionError("covariance must be square");
  }
  if (covariance.rows() != drift.size()) {
    throw DimensionError("covariance order must match the drift length");
  }
  input_asymmetry = relative_asymmetry(covariance);
  covariance = ((covariance + covariance.transpose()) / 2.0).eval();
}

CapmModel::CapmModel(double mu_in, double sigma_in, double risk_free_in,
                     Vector betas_in, Matrix residual_cov_in)
    : mu(mu_in),
      sigma(sigma_in),
      risk_free(risk_free_in),
      betas(std::move(betas_in)),
      residual_cov(std::move(residual_cov_in)) {
  if (betas.size() < 1) {
    throw DimensionError("factor model requires at least one risky asset");
  }
  if (residual_cov.rows() != residual_cov.cols()) {
    throw DimensionError("residual covariance must be square");
  }
  if (residual_cov.rows() != betas.size()) {
    throw DimensionError("residual covariance order must match the betas length");
  }
  input_asymmetry = relative_asymmetry(residual_cov);
  residual_cov = ((residual_cov + residual_cov.transpose()) / 2.0).eval();
}

void ValidationReport::add(Severity severity, std::string code,
                           std::string message) {
  if (severity == Severity::error) ok = false;
  findings.push_back({severity, std::move(code), std::move(message)});
}

bool ValidationReport::has(const std::string& code) const {
  for (const auto& f : findings) {
    if (f.code == code) return true;
  }
  return false;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (i) os << "; ";
    os << (findings[i].severity == Severity::error ? "error" : "warning")
       << "[" << findings[i].code << "]: " << findings[i].message;
  }
  return os.str();
}

ValidationFailure::ValidationFailure(const std::string& message,
                                     ValidationReport report)
    : std::runtime_error(message + (report.findings.empty()
                                        ? std::string{}
                                        : " (" + report.summary() + ")")),
      report_(std::move(report)) {}

PivotedCholesky cholesky_with_pivots(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("Cholesky factorization requires a square matrix");
  }
  const Eigen::Index n = a.rows();
  PivotedCholesky out;
  out.lower = Matrix::Zero(n, n);
  out.pivots = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = a(j, j) - out.lower.row(j).head(j).squaredNorm();
    out.pivots(j) = d;
    if (!(d > 0.0)) {
      out.failed_at = j;
      out.pivots.conservativeResize(j + 1);
      return out;
    }
    const double root = std::sqrt(d);
    out.lower(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double s =
          a(i, j) - out.lower.row(i).head(j).dot(out.lower.row(j).head(j));
      out.lower(i, j) = s / root;
    }
  }
  return out;
}

CholeskyFactor cholesky_factor(const Matrix& a) {
  PivotedCholesky chol = cholesky_with_pivots(a);
  if (!chol.ok()) {
    std::ostringstream os;
    os << "matrix is not positive definite: pivot "
       << chol.pivots(chol.failed_at) << " at index " << chol.failed_at;
    throw ConditioningError(os.str(), static_cast<long>(chol.failed_at));
  }
  return CholeskyFactor{std::move(chol.lower)};
}

Vector cholesky_solve(const CholeskyFactor& factor, const Vector& rhs) {
  if (factor.lower.rows() != rhs.size()) {
    throw DimensionError("right-hand side length must match the factor order");
  }
  Vector y = factor.lower.triangularView<Eigen::Lower>().solve(rhs);
  return factor.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

ValidationReport validate_market(const MarketModel& m, double eps_floor) {
  ValidationReport report;
  if (!m.drift.allFinite()) {
    report.add(Severity::error, "nonfinite_drift",
               "drift contains non-finite entries");
  }
  if (!std::isfinite(m.risk_free)) {
    report.add(Severity::error, "nonfinite_rate",
               "risk-free rate is not finite");
  }
  check_covariance(m.covariance, m.input_asymmetry, eps_floor, "covariance",
                   report);
  return report;
}

ValidationReport validate_capm(const CapmModel& c, double eps_floor) {
  ValidationReport report;
  if (!c.betas.allFinite()) {
    report.add(Severity::error, "nonfinite_betas",
               "betas contain non-finite entries");
  }
  if (!std::isfinite(c.mu) || !std::isfinite(c.sigma) ||
      !std::isfinite(c.risk_free)) {
    report.add(Severity::error, "nonfinite_rate",
               "mu, sigma and the risk-free rate must be finite");
  }
  if (!(c.sigma > 0.0)) {
    report.add(Severity::error, "nonpositive_sigma",
               "benchmark volatility must be positive");
  }
  if (!(c.mu > c.risk_free)) {
    report.add(Severity::error, "benchmark_premium",
               "benchmark growth rate must exceed the risk-free rate");
  }
  check_covariance(c.residual_cov, c.input_asymmetry, eps_floor,
                   "residual covariance", report);
  return report;
}

MarketModel assemble_capm_investable(const CapmModel& c) {
  ValidationReport input = validate_capm(c);
  if (!input.ok) {
    throw ValidationFailure("cannot assemble market: residual covariance block "
                            "or rates are invalid",
                            std::move(input));
  }
  const Eigen::Index n = c.n_assets();
  const double s2 = c.sigma * c.sigma;

  Vector drift(n + 1);
  drift(0) = c.mu;
  drift.tail(n) = c.risk_free * Vector::Ones(n) + (c.mu - c.risk_free) * c.betas;

  Matrix cov(n + 1, n + 1);
  cov(0, 0) = s2;
  cov.block(0, 1, 1, n) = s2 * c.betas.transpose();
  cov.block(1, 0, n, 1) = s2 * c.betas;
  cov.block(1, 1, n, n) =
      c.residual_cov + s2 * (c.betas * c.betas.transpose());

  MarketModel assembled(std::move(drift), std::move(cov), c.risk_free);
  ValidationReport out = validate_market(assembled);
  if (!out.ok) {
    throw ValidationFailure("assembled covariance block failed validation",
                            std::move(out));
  }
  return assembled;
}

MarketModel assemble_capm_noninvestable(const CapmModel& c) {
  ValidationReport input = validate_capm(c);
  if (!input.ok) {
    throw ValidationFailure("cannot assemble market: residual covariance block "
                            "or rates are invalid",
                            std::move(input));
  }
  const Eigen::Index n = c.n_assets();
  const double s2 = c.sigma * c.sigma;

  Vector drift = c.risk_free * Vector::Ones(n) + (c.mu - c.risk_free) * c.betas;
  Matrix cov = c.residual_cov + s2 * (c.betas * c.betas.transpose());

  MarketModel assembled(std::move(drift), std::move(cov), c.risk_free);
  ValidationReport out = validate_market(assembled);
  if (!out.ok) {
    throw ValidationFailure("assembled covariance block failed validation",
                            std::move(out));
  }
  return assembled;
}

}  // namespace powerfolio
