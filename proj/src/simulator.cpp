#include "powerfolio/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "powerfolio/rng.hpp"

namespace powerfolio {

namespace {

void check_config(const SimConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw ParameterError("horizon must be positive");
  if (cfg.steps < 1) throw ParameterError("steps must be at least 1");
  if (cfg.paths < 1) throw ParameterError("paths must be at least 1");
}

// One path of terminal log-wealth for every column. nsteps = 1 is the exact
// scheme: the increment of ln V is linear in the Brownian increments, so a
// single Gaussian step is exact in distribution for constant coefficients.
void fill_path(Matrix& out, Eigen::Index path, const Matrix& weights,
               const Vector& drifts, const Matrix& sigma, double horizon,
               int nsteps, std::uint64_t seed) {
  const Eigen::Index n = sigma.rows();
  const Eigen::Index cols = weights.cols();
  CounterStream stream(seed, static_cast<std::uint64_t>(path));
  const double dt = horizon / nsteps;
  const double root_dt = std::sqrt(dt);

  Vector increments(n);
  Vector noise(n);
  for (Eigen::Index c = 0; c < cols; ++c) out(path, c) = 0.0;
  for (int s = 0; s < nsteps; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) {
      increments(i) = root_dt * stream.next_normal();
    }
    noise.noalias() = sigma * increments;
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(path, c) += drifts(c) * dt + weights.col(c).dot(noise);
    }
  }
}

void run_paths(Matrix& out, const Matrix& weights, const Vector& drifts,
               const Matrix& sigma, double horizon, int nsteps,
               std::uint64_t seed, int workers) {
  const Eigen::Index paths = out.rows();
  workers = std::clamp<int>(workers, 1, static_cast<int>(paths));
  if (workers == 1) {
    for (Eigen::Index p = 0; p < paths; ++p) {
      fill_path(out, p, weights, drifts, sigma, horizon, nsteps, seed);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const Eigen::Index chunk = (paths + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index lo = w * chunk;
    const Eigen::Index hi = std::min(paths, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (Eigen::Index p = lo; p < hi; ++p) {
        fill_path(out, p, weights, drifts, sigma, horizon, nsteps, seed);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

TerminalSamples simulate_terminal(const MarketModel& model,
                                  const std::vector<Portfolio>& portfolios,
                                  const BenchmarkSet& benchmarks,
                                  const SimConfig& cfg, int workers) {
  check_config(cfg);
  ValidationReport validation = validate_market(model);
  if (!validation.ok) {
    throw ValidationFailure("cannot simulate an invalid market",
                            std::move(validation));
  }
  const Eigen::Index n = model.n_assets();
  const Eigen::Index n_port = static_cast<Eigen::Index>(portfolios.size());
  const Eigen::Index n_bench = static_cast<Eigen::Index>(benchmarks.count());
  const Eigen::Index cols = n_port + n_bench;
  if (cols == 0) {
    throw ParameterError("nothing to simulate: no portfolios or benchmarks");
  }

  Matrix weights(n, cols);
  for (Eigen::Index c = 0; c < n_port; ++c) {
    if (portfolios[c].size() != n) {
      throw DimensionError("portfolio length must match the market");
    }
    weights.col(c) = portfolios[c].weights;
  }
  for (Eigen::Index j = 0; j < n_bench; ++j) {
    if (benchmarks.weights[j].size() != n) {
      throw DimensionError("benchmark length must match the market");
    }
    weights.col(n_port + j) = benchmarks.weights[j];
  }

  const Vector premium =
      model.drift - model.risk_free * Vector::Ones(n);
  Vector drifts(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const Vector& w = weights.col(c);
    drifts(c) = w.dot(premium) + model.risk_free -
                0.5 * (model.covariance * w).dot(w);
  }

  const Matrix sigma = cholesky_factor(model.covariance).lower;
  const int nsteps = cfg.scheme == Scheme::exact_log ? 1 : cfg.steps;

  TerminalSamples samples;
  samples.n_portfolios = n_port;
  samples.n_benchmarks = n_bench;
  samples.horizon = cfg.horizon;
  samples.log_wealth.resize(cfg.paths, cols);
  run_paths(samples.log_wealth, weights, drifts, sigma, cfg.horizon, nsteps,
            cfg.seed, workers);
  return samples;
}

SimResult estimate_expected_utility(const TerminalSamples& samples,
                                    Eigen::Index portfolio_index,
                                    const Portfolio& portfolio,
                                    const ObjectiveContext& ctx) {
  const std::size_t k = ctx.params().gammas.size();
  if (static_cast<Eigen::Index>(k) != samples.n_benchmarks) {
    throw DimensionError(
        "benchmark count of the samples does not match the utility exponents");
  }
  if (portfolio_index < 0 || portfolio_index >= samples.n_portfolios) {
    throw DimensionError("portfolio index out of range");
  }
  const Eigen::Index paths = samples.log_wealth.rows();
  const double one_minus_gamma = 1.0 - ctx.params().gamma;

  std::vector<double> utilities(static_cast<std::size_t>(paths));
  for (Eigen::Index p = 0; p < paths; ++p) {
    double exponent = one_minus_gamma * samples.log_wealth(p, portfolio_index);
    for (std::size_t j = 0; j < k; ++j) {
      exponent -= ctx.params().gammas[j] *
                  samples.log_wealth(p, samples.n_portfolios +
                                            static_cast<Eigen::Index>(j));
    }
    utilities[static_cast<std::size_t>(p)] = std::exp(exponent);
  }

  SimResult result;
  result.mean_utility = pairwise_sum(utilities) / static_cast<double>(paths);
  if (paths > 1) {
    std::vector<double> sq(utilities.size());
    for (std::size_t i = 0; i < utilities.size(); ++i) {
      const double d = utilities[i] - result.mean_utility;
      sq[i] = d * d;
    }
    const double variance =
        pairwise_sum(sq) / static_cast<double>(paths - 1);
    result.stderr_ = std::sqrt(variance / static_cast<double>(paths));
  }
  result.analytic =
      std::exp(samples.horizon * objective_H(portfolio, ctx));
  const double gap = result.mean_utility - result.analytic;
  if (result.stderr_ > 0.0) {
    result.z_score = gap / result.stderr_;
  } else {
    result.z_score = gap == 0.0 ? 0.0
                                : std::copysign(
                                      std::numeric_limits<double>::infinity(),
                                      gap);
  }
  return result;
}

std::vector<SimResult> estimate_expected_utility(
    const TerminalSamples& samples, const std::vector<Portfolio>& portfolios,
    const ObjectiveContext& ctx) {
  if (static_cast<Eigen::Index>(portfolios.size()) != samples.n_portfolios) {
    throw DimensionError("portfolio list does not match the sample columns");
  }
  std::vector<SimResult> results;
  results.reserve(portfolios.size());
  for (std::size_t c = 0; c < portfolios.size(); ++c) {
    results.push_back(estimate_expected_utility(
        samples, static_cast<Eigen::Index>(c), portfolios[c], ctx));
  }
  return results;
}

OptimalityReport verify_optimality(const ObjectiveContext& ctx,
                                   const Portfolio& candidate,
                                   const SimConfig& cfg, int n_perturbations,
                                   double radius, int workers) {
  if (n_perturbations < 0) {
    throw ParameterError("perturbation count must be non-negative");
  }
  if (radius < 0.0) throw ParameterError("radius must be non-negative");
  const Eigen::Index n = ctx.n_assets();
  // Directions come from a dedicated stream so they never collide with the
  // per-path draws.
  CounterStream directions(cfg.seed ^ 0x9E3779B97F4A7C15ull, 0);

  OptimalityReport report;
  report.n_perturbations = n_perturbations;
  report.max_objective_gain = -std::numeric_limits<double>::infinity();
  const double base_h = objective_H(candidate, ctx);
  const double gamma = ctx.params().gamma;
  const auto& gammas = ctx.params().gammas;

  for (int j = 0; j < n_perturbations; ++j) {
    Vector d(n);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < n; ++i) d(i) = directions.next_normal();
      norm = d.norm();
    } while (norm < 1e-12);
    d *= radius / norm;
    const Portfolio perturbed(candidate.weights + d);

    const double gain = objective_H(perturbed, ctx) - base_h;
    if (gain > report.max_objective_gain) report.max_objective_gain = gain;
    if (gain > 0.0) ++report.analytic_violations;

    // Same seed per call: every comparison shares the driving noise.
    const TerminalSamples samples = simulate_terminal(
        ctx.model(), {candidate, perturbed}, ctx.benchmarks(), cfg, workers);
    const Eigen::Index paths = samples.log_wealth.rows();
    std::vector<double> diff(static_cast<std::size_t>(paths));
    for (Eigen::Index p = 0; p < paths; ++p) {
      double bench_exponent = 0.0;
      for (std::size_t b = 0; b < gammas.size(); ++b) {
        bench_exponent -= gammas[b] *
                          samples.log_wealth(p, samples.n_portfolios +
                                                    static_cast<Eigen::Index>(b));
      }
      const double u_cand =
          std::exp((1.0 - gamma) * samples.log_wealth(p, 0) + bench_exponent);
      const double u_pert =
          std::exp((1.0 - gamma) * samples.log_wealth(p, 1) + bench_exponent);
      diff[static_cast<std::size_t>(p)] = u_cand - u_pert;
    }
    const double mean_diff =
        pairwise_sum(diff) / static_cast<double>(paths);
    double stderr_diff = 0.0;
    if (paths > 1) {
      std::vector<double> sq(diff.size());
      for (std::size_t i = 0; i < diff.size(); ++i) {
        const double d2 = diff[i] - mean_diff;
        sq[i] = d2 * d2;
      }
      stderr_diff = std::sqrt(pairwise_sum(sq) /
                              static_cast<double>(paths - 1) /
                              static_cast<double>(paths));
    }
    if (stderr_diff > 0.0 && mean_diff < -3.0 * stderr_diff) {
      ++report.mc_violations;
    }
  }
  if (n_perturbations == 0) report.max_objective_gain = 0.0;
  return report;
}

}  // namespace powerfolio
