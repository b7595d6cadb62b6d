#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "powerfolio/cli.hpp"
#include "powerfolio/estimation.hpp"
#include "powerfolio/optimizer.hpp"
#include "powerfolio/problem_io.hpp"
#include "powerfolio/simulator.hpp"
#include "powerfolio/version.hpp"

namespace py = pybind11;
using namespace powerfolio;

namespace {

BenchmarkSet to_benchmarks(const std::vector<Vector>& weights) {
  return BenchmarkSet(weights);
}

std::vector<Portfolio> to_portfolios(const std::vector<Vector>& weights) {
  std::vector<Portfolio> out;
  out.reserve(weights.size());
  for (const auto& w : weights) out.emplace_back(w);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Optimal portfolios under power utility of absolute and "
      "benchmark-relative wealth";
  m.attr("__version__") = kVersion;

  py::register_exception<DimensionError>(m, "DimensionError",
                                         PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError",
                                         PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConditioningError>(m, "ConditioningError",
                                            PyExc_ArithmeticError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ValidationFailure>(m, "ValidationFailure",
                                            PyExc_ValueError);

  py::class_<MarketModel>(m, "MarketModel")
      .def(py::init<Vector, Matrix, double>(), py::arg("drift"),
           py::arg("covariance"), py::arg("risk_free"))
      .def_readonly("drift", &MarketModel::drift)
      .def_readonly("covariance", &MarketModel::covariance)
      .def_readonly("risk_free", &MarketModel::risk_free)
      .def_property_readonly("n_assets", &MarketModel::n_assets);

  py::class_<CapmModel>(m, "CapmModel")
      .def(py::init<double, double, double, Vector, Matrix>(), py::arg("mu"),
           py::arg("sigma"), py::arg("risk_free"), py::arg("betas"),
           py::arg("residual_cov"))
      .def_readonly("mu", &CapmModel::mu)
      .def_readonly("sigma", &CapmModel::sigma)
      .def_readonly("risk_free", &CapmModel::risk_free)
      .def_readonly("betas", &CapmModel::betas)
      .def_readonly("residual_cov", &CapmModel::residual_cov)
      .def_property_readonly("n_assets", &CapmModel::n_assets);

  py::class_<UtilityParams>(m, "UtilityParams")
      .def(py::init<double, std::vector<double>>(), py::arg("gamma"),
           py::arg("gammas") = std::vector<double>{})
      .def_readonly("gamma", &UtilityParams::gamma)
      .def_readonly("gammas", &UtilityParams::gammas);

  py::class_<Finding>(m, "Finding")
      .def_property_readonly(
          "severity",
          [](const Finding& f) {
            return f.severity == Severity::error ? "error" : "warning";
          })
      .def_readonly("code", &Finding::code)
      .def_readonly("message", &Finding::message)
      .def("__repr__", [](const Finding& f) {
        return "Finding(" + f.code + ": " + f.message + ")";
      });

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("ok", &ValidationReport::ok)
      .def_readonly("findings", &ValidationReport::findings)
      .def_readonly("min_pivot", &ValidationReport::min_pivot);

  py::class_<FormulaCheck>(m, "FormulaCheck")
      .def_readonly("name", &FormulaCheck::name)
      .def_readonly("expression", &FormulaCheck::expression)
      .def_readonly("value", &FormulaCheck::value)
      .def_readonly("max_abs_diff", &FormulaCheck::max_abs_diff)
      .def_readonly("matches_oracle", &FormulaCheck::matches_oracle);

  py::class_<Solution>(m, "Solution")
      .def_property_readonly(
          "weights", [](const Solution& s) { return s.portfolio.weights; })
      .def_property_readonly(
          "cash", [](const Solution& s) { return s.portfolio.cash(); })
      .def_readonly("objective_value", &Solution::objective_value)
      .def_readonly("gradient_norm", &Solution::gradient_norm)
      .def_readonly("constraint_residual", &Solution::constraint_residual)
      .def_readonly("lagrange_multiplier", &Solution::lagrange_multiplier)
      .def_readonly("diagnostics", &Solution::diagnostics);

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("mean_utility", &SimResult::mean_utility)
      .def_property_readonly("stderr",
                             [](const SimResult& r) { return r.stderr_; })
      .def_readonly("analytic", &SimResult::analytic)
      .def_readonly("z_score", &SimResult::z_score);

  py::class_<OptimalityReport>(m, "OptimalityReport")
      .def_readonly("n_perturbations", &OptimalityReport::n_perturbations)
      .def_readonly("analytic_violations",
                    &OptimalityReport::analytic_violations)
      .def_readonly("mc_violations", &OptimalityReport::mc_violations)
      .def_readonly("max_objective_gain",
                    &OptimalityReport::max_objective_gain);

  m.def("validate_market", &validate_market, py::arg("model"),
        py::arg("eps_floor") = kDefaultEllipticityFloor);
  m.def("validate_capm", &validate_capm, py::arg("model"),
        py::arg("eps_floor") = kDefaultEllipticityFloor);
  m.def(
      "cholesky_factor",
      [](const Matrix& a) { return cholesky_factor(a).lower; },
      py::arg("spd_matrix"),
      "Lower-triangular L with L L^T = A; raises ConditioningError when A is "
      "not positive definite.");
  m.def("assemble_capm_investable", &assemble_capm_investable);
  m.def("assemble_capm_noninvestable", &assemble_capm_noninvestable);

  m.def("power_utility", &power_utility, py::arg("x"), py::arg("gamma"));
  m.def(
      "combined_utility",
      [](double wealth, const std::vector<double>& benchmark_wealths,
         const UtilityParams& params) {
        return combined_utility(wealth, benchmark_wealths, params);
      },
      py::arg("wealth"), py::arg("benchmark_wealths"), py::arg("params"));
  m.def(
      "objective_components",
      [](const Vector& weights, const MarketModel& model,
         const UtilityParams& params, const std::vector<Vector>& benchmarks) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        const auto value = objective_components(Portfolio(weights), ctx);
        return py::make_tuple(value.F, value.G, value.H);
      },
      py::arg("weights"), py::arg("model"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{},
      "Returns the tuple (F, G, H) with H = F + G/2.");
  m.def(
      "grad_H",
      [](const Vector& weights, const MarketModel& model,
         const UtilityParams& params, const std::vector<Vector>& benchmarks) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        return grad_H(Portfolio(weights), ctx);
      },
      py::arg("weights"), py::arg("model"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{});
  m.def("portfolio_beta", &portfolio_beta, py::arg("weights"),
        py::arg("betas"), py::arg("investable"));

  m.def(
      "merton_optimal",
      [](const MarketModel& model, const UtilityParams& params,
         const std::vector<Vector>& benchmarks) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        return merton_optimal(ctx);
      },
      py::arg("model"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{});
  m.def("capm_constrained_investable",
        [](const CapmModel& model, const UtilityParams& params,
           const std::vector<Vector>& benchmarks, double beta0) {
          return capm_constrained_investable(model, params,
                                             to_benchmarks(benchmarks), beta0);
        },
        py::arg("model"), py::arg("params"), py::arg("benchmarks"),
        py::arg("beta0"));
  m.def("capm_constrained_noninvestable",
        [](const CapmModel& model, const UtilityParams& params,
           const std::vector<Vector>& benchmarks, double beta0) {
          return capm_constrained_noninvestable(
              model, params, to_benchmarks(benchmarks), beta0);
        },
        py::arg("model"), py::arg("params"), py::arg("benchmarks"),
        py::arg("beta0"));
  m.def(
      "kkt_oracle",
      [](const MarketModel& model, const UtilityParams& params,
         const std::vector<Vector>& benchmarks,
         std::optional<std::pair<double, Vector>> beta_constraint,
         bool investable) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        ConstraintSpec constraint = ConstraintSpec::none();
        if (beta_constraint) {
          constraint = investable
                           ? ConstraintSpec::investable(beta_constraint->first,
                                                        beta_constraint->second)
                           : ConstraintSpec::vector(beta_constraint->first,
                                                    beta_constraint->second);
        }
        return kkt_oracle(ctx, constraint);
      },
      py::arg("model"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{},
      py::arg("beta_constraint") = py::none(), py::arg("investable") = false,
      "Independent constrained maximizer of H. beta_constraint is an "
      "optional (beta0, betas) pair.");

  m.def(
      "simulate_terminal",
      [](const MarketModel& model, const std::vector<Vector>& portfolios,
         const std::vector<Vector>& benchmarks, double horizon, int steps,
         std::int64_t paths, std::uint64_t seed, const std::string& scheme,
         int workers) {
        SimConfig cfg;
        cfg.horizon = horizon;
        cfg.steps = steps;
        cfg.paths = paths;
        cfg.seed = seed;
        cfg.scheme =
            scheme == "euler_log" ? Scheme::euler_log : Scheme::exact_log;
        const TerminalSamples samples =
            simulate_terminal(model, to_portfolios(portfolios),
                              to_benchmarks(benchmarks), cfg, workers);
        return samples.log_wealth;
      },
      py::arg("model"), py::arg("portfolios"),
      py::arg("benchmarks") = std::vector<Vector>{}, py::arg("horizon") = 1.0,
      py::arg("steps") = 1, py::arg("paths") = 100000, py::arg("seed") = 0,
      py::arg("scheme") = "exact_log", py::arg("workers") = 1,
      "Terminal log-wealth samples: one column per portfolio, then one per "
      "benchmark.");
  m.def(
      "expected_utility",
      [](const MarketModel& model, const Vector& weights,
         const UtilityParams& params, const std::vector<Vector>& benchmarks,
         double horizon, std::int64_t paths, std::uint64_t seed, int workers) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        SimConfig cfg;
        cfg.horizon = horizon;
        cfg.paths = paths;
        cfg.seed = seed;
        const Portfolio portfolio(weights);
        const TerminalSamples samples = simulate_terminal(
            model, {portfolio}, ctx.benchmarks(), cfg, workers);
        return estimate_expected_utility(samples, 0, portfolio, ctx);
      },
      py::arg("model"), py::arg("weights"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{}, py::arg("horizon") = 1.0,
      py::arg("paths") = 100000, py::arg("seed") = 0, py::arg("workers") = 1,
      "Monte Carlo estimate of E[U] with the exp(T H) analytic reference.");
  m.def(
      "verify_optimality",
      [](const MarketModel& model, const Vector& candidate,
         const UtilityParams& params, const std::vector<Vector>& benchmarks,
         double horizon, std::int64_t paths, std::uint64_t seed,
         int n_perturbations, double radius, int workers) {
        const ObjectiveContext ctx(model, params, to_benchmarks(benchmarks));
        SimConfig cfg;
        cfg.horizon = horizon;
        cfg.paths = paths;
        cfg.seed = seed;
        return verify_optimality(ctx, Portfolio(candidate), cfg,
                                 n_perturbations, radius, workers);
      },
      py::arg("model"), py::arg("candidate"), py::arg("params"),
      py::arg("benchmarks") = std::vector<Vector>{}, py::arg("horizon") = 1.0,
      py::arg("paths") = 10000, py::arg("seed") = 0,
      py::arg("n_perturbations") = 200, py::arg("radius") = 0.1,
      py::arg("workers") = 1);

  m.def(
      "estimate_from_returns",
      [](const Matrix& returns, double dt, double risk_free) {
        ReturnsTable table;
        table.dt = dt;
        table.returns = returns;
        table.names.resize(static_cast<std::size_t>(returns.cols()));
        for (std::size_t i = 0; i < table.names.size(); ++i) {
          table.names[i] = "asset_" + std::to_string(i + 1);
        }
        return estimate_from_returns(table, risk_free);
      },
      py::arg("returns"), py::arg("dt"), py::arg("risk_free"),
      "Annualized sample-moment market model from simple per-period returns "
      "(rows = periods).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        return run_command(args);
      },
      py::arg("args"), "Run the command-line interface; returns its exit code.");
}
