#pragma once
// Market primitives: constant growth rates, covariance and risk-free rate
// for a set of risky assets, plus the one-factor benchmark/beta market that
// assembles into the same form.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "powerfolio/errors.hpp"

namespace powerfolio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Smallest admissible Cholesky pivot before a covariance counts as
/// numerically rank-deficient.
inline constexpr double kDefaultEllipticityFloor = 1e-12;

/// Relative asymmetry thresholds for covariance inputs. Below the first the
/// input is accepted silently, between the two it is symmetrized with a
/// warning, above the second validation reports an error.
inline constexpr double kAsymmetryWarnTol = 1e-12;
inline constexpr double kAsymmetryErrorTol = 1e-6;

/// Constant-coefficient market of N risky assets and one risk-free asset:
///   dS_i/S_i = g_i dt + (Sigma dW)_i,   dB/B = r dt,
/// with Sigma a matrix square root of the covariance A. Immutable once
/// constructed; the constructor symmetrizes the covariance as (A + A^T)/2
/// and keeps the input's relative asymmetry observable for validation.
struct MarketModel {
  Vector drift;                  ///< annualized growth rates g, length N
  Matrix covariance;             ///< annualized covariance A, N x N, symmetric
  double risk_free = 0.0;        ///< annualized rate r
  double input_asymmetry = 0.0;  ///< relative asymmetry of the covariance input

  MarketModel() = default;
  /// Throws DimensionError when shapes disagree or N = 0.
  MarketModel(Vector drift_in, Matrix covariance_in, double risk_free_in);

  Eigen::Index n_assets() const { return drift.size(); }
};

/// One-factor market: a traded benchmark with growth mu and volatility sigma,
/// N assets whose excess returns load on the benchmark through betas, and an
/// idiosyncratic residual covariance C.
struct CapmModel {
  double mu = 0.0;               ///< benchmark growth rate
  double sigma = 0.0;            ///< benchmark volatility
  double risk_free = 0.0;
  Vector betas;                  ///< per-asset market exposures, length N
  Matrix residual_cov;           ///< residual covariance C, N x N
  double input_asymmetry = 0.0;  ///< relative asymmetry of the C input

  CapmModel() = default;
  CapmModel(double mu_in, double sigma_in, double risk_free_in, Vector betas_in,
            Matrix residual_cov_in);

  Eigen::Index n_assets() const { return betas.size(); }
};

enum class Severity { warning, error };

struct Finding {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
};

/// Outcome of model validation; `ok` iff no finding has severity error.
/// min_pivot is the smallest Cholesky pivot encountered (or the pivot at
/// failure), so the ellipticity of the covariance is an observable quantity.
struct ValidationReport {
  bool ok = true;
  std::vector<Finding> findings;
  double min_pivot = 0.0;

  void add(Severity severity, std::string code, std::string message);
  bool has(const std::string& code) const;
  std::string summary() const;
};

/// Thrown by operations that require a valid model when validation failed.
class ValidationFailure : public std::runtime_error {
 public:
  ValidationFailure(const std::string& message, ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Lower-triangular factor L with L L^T = A.
struct CholeskyFactor {
  Matrix lower;
};

/// Cholesky factorization with observable diagonal pivots
/// d_j = A_jj - sum_k L_jk^2 (the value before the square root).
/// `failed_at` is the index of the first pivot <= 0, or -1 on success;
/// pivots past a failure are not computed.
struct PivotedCholesky {
  Matrix lower;
  Vector pivots;
  Eigen::Index failed_at = -1;

  bool ok() const { return failed_at < 0; }
  double min_pivot() const {
    return pivots.size() > 0 ? pivots.minCoeff() : 0.0;
  }
};

PivotedCholesky cholesky_with_pivots(const Matrix& a);

/// Factor an SPD matrix. Throws ConditioningError carrying the failing pivot
/// index when the matrix is not numerically positive definite.
CholeskyFactor cholesky_factor(const Matrix& a);

/// Solve A x = rhs from a Cholesky factor of A (two triangular solves).
Vector cholesky_solve(const CholeskyFactor& factor, const Vector& rhs);

/// Check finiteness, symmetry of the input, positive definiteness and the
/// ellipticity floor. Structural problems (shape mismatches) throw at model
/// construction and never appear as findings.
ValidationReport validate_market(const MarketModel& m,
                                 double eps_floor = kDefaultEllipticityFloor);

/// Check the factor specification: positive sigma, SPD residual covariance,
/// and benchmark growth above the risk-free rate.
ValidationReport validate_capm(const CapmModel& c,
                               double eps_floor = kDefaultEllipticityFloor);

/// Expand the factor model into the (N+1)-asset market whose asset 0 is the
/// benchmark itself:
///   g = (mu, r 1 + (mu - r) b),
///   A = [[s2, s2 b^T], [s2 b, C + s2 b b^T]],   s2 = sigma^2.
/// The result passes validate_market whenever the inputs are valid.
MarketModel assemble_capm_investable(const CapmModel& c);

/// Expand into the N-asset market seen when the benchmark cannot be held:
///   g = r 1 + (mu - r) b,   A = C + s2 b b^T.
/// Equals the risky sub-block of the investable assembly.
MarketModel assemble_capm_noninvestable(const CapmModel& c);

}  // namespace powerfolio
