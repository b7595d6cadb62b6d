#include "powerfolio/problem_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>
#include <vector>

namespace powerfolio {

using nlohmann::json;

namespace {

class SchemaIssues {
 public:
  void add(const std::string& path, const std::string& message) {
    issues_.push_back(path + ": " + message);
  }
  bool empty() const { return issues_.empty(); }
  void raise_if_any() const {
    if (issues_.empty()) return;
    std::ostringstream os;
    for (std::size_t i = 0; i < issues_.size(); ++i) {
      if (i) os << "; ";
      os << issues_[i];
    }
    throw SchemaError(os.str());
  }

 private:
  std::vector<std::string> issues_;
};

std::string type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "a boolean";
    case json::value_t::string: return "a string";
    case json::value_t::array: return "an array";
    case json::value_t::object: return "an object";
    default: return j.is_number() ? "a number" : "an unknown value";
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed,
                SchemaIssues& issues) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      issues.add(path.empty() ? item.key() : path + "." + item.key(),
                 "unknown field");
    }
  }
}

std::optional<double> parse_finite(const json& j, const std::string& path,
                                   SchemaIssues& issues) {
  if (!j.is_number()) {
    issues.add(path, "expected a number, found " + type_name(j));
    return std::nullopt;
  }
  const double value = j.get<double>();
  if (!std::isfinite(value)) {
    issues.add(path, "expected a finite number");
    return std::nullopt;
  }
  return value;
}

std::optional<double> require_number(const json& obj, std::string_view key,
                                     const std::string& path,
                                     SchemaIssues& issues) {
  const json* j = find(obj, key);
  if (!j) {
    issues.add(path + "." + std::string(key), "missing required field");
    return std::nullopt;
  }
  return parse_finite(*j, path + "." + std::string(key), issues);
}

std::optional<Vector> parse_vector(const json& j, const std::string& path,
                                   SchemaIssues& issues) {
  if (!j.is_array()) {
    issues.add(path, "expected an array of numbers, found " + type_name(j));
    return std::nullopt;
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto value =
        parse_finite(j[i], path + "[" + std::to_string(i) + "]", issues);
    if (!value) return std::nullopt;
    v(static_cast<Eigen::Index>(i)) = *value;
  }
  return v;
}

std::optional<Matrix> parse_matrix(const json& j, const std::string& path,
                                   SchemaIssues& issues) {
  if (!j.is_array() || j.empty()) {
    issues.add(path, "expected a non-empty array of rows");
    return std::nullopt;
  }
  const std::size_t rows = j.size();
  std::vector<Vector> parsed;
  parsed.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = parse_vector(j[r], path + "[" + std::to_string(r) + "]", issues);
    if (!row) return std::nullopt;
    parsed.push_back(std::move(*row));
    if (parsed.back().size() != parsed.front().size()) {
      issues.add(path, "rows must all have the same length");
      return std::nullopt;
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows), parsed.front().size());
  for (std::size_t r = 0; r < rows; ++r) {
    m.row(static_cast<Eigen::Index>(r)) = parsed[r].transpose();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(vector_to_json(m.row(r).transpose()));
  }
  return out;
}

std::string scheme_to_string(Scheme scheme) {
  return scheme == Scheme::exact_log ? "exact_log" : "euler_log";
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::merton: return "merton";
    case Mode::capm_investable: return "capm_investable";
    case Mode::capm_noninvestable: return "capm_noninvestable";
  }
  return "merton";
}

Mode mode_from_string(const std::string& name) {
  if (name == "merton") return Mode::merton;
  if (name == "capm_investable") return Mode::capm_investable;
  if (name == "capm_noninvestable") return Mode::capm_noninvestable;
  throw SchemaError(
      "expected one of merton, capm_investable, capm_noninvestable; found '" +
          name + "'",
      "mode");
}

ProblemSpec problem_from_json(const json& j) {
  if (!j.is_object()) {
    throw SchemaError("problem must be a JSON object, found " + type_name(j));
  }
  SchemaIssues issues;
  check_keys(j, "",
             {"mode", "market", "capm", "utility", "benchmarks", "constraint",
              "simulation", "portfolio"},
             issues);

  ProblemSpec spec;

  // mode
  const json* mode = find(j, "mode");
  if (!mode) {
    issues.add("mode", "missing required field");
  } else if (!mode->is_string()) {
    issues.add("mode", "expected a string, found " + type_name(*mode));
  } else {
    try {
      spec.mode = mode_from_string(mode->get<std::string>());
    } catch (const SchemaError& e) {
      issues.add("mode", e.what());
    }
  }
  issues.raise_if_any();
  const bool is_capm = spec.mode != Mode::merton;

  // market / capm block
  if (!is_capm) {
    if (find(j, "capm")) issues.add("capm", "only valid in capm_* modes");
    if (find(j, "constraint")) {
      issues.add("constraint", "only valid in capm_* modes");
    }
    const json* market = find(j, "market");
    if (!market) {
      issues.add("market", "missing required field for merton mode");
    } else if (!market->is_object()) {
      issues.add("market", "expected an object, found " + type_name(*market));
    } else {
      check_keys(*market, "market", {"drift", "covariance", "risk_free"},
                 issues);
      std::optional<Vector> drift;
      std::optional<Matrix> covariance;
      if (const json* d = find(*market, "drift")) {
        drift = parse_vector(*d, "market.drift", issues);
      } else {
        issues.add("market.drift", "missing required field");
      }
      if (const json* a = find(*market, "covariance")) {
        covariance = parse_matrix(*a, "market.covariance", issues);
      } else {
        issues.add("market.covariance", "missing required field");
      }
      const auto risk_free = require_number(*market, "risk_free", "market",
                                            issues);
      if (drift && covariance && risk_free) {
        try {
          spec.market.emplace(std::move(*drift), std::move(*covariance),
                              *risk_free);
        } catch (const DimensionError& e) {
          throw DimensionError(std::string("market: ") + e.what());
        }
      }
    }
  } else {
    if (find(j, "market")) issues.add("market", "only valid in merton mode");
    const json* capm = find(j, "capm");
    if (!capm) {
      issues.add("capm", "missing required field for capm_* modes");
    } else if (!capm->is_object()) {
      issues.add("capm", "expected an object, found " + type_name(*capm));
    } else {
      check_keys(*capm, "capm",
                 {"mu", "sigma", "risk_free", "betas", "residual_cov"},
                 issues);
      const auto mu = require_number(*capm, "mu", "capm", issues);
      const auto sigma = require_number(*capm, "sigma", "capm", issues);
      const auto risk_free = require_number(*capm, "risk_free", "capm", issues);
      std::optional<Vector> betas;
      std::optional<Matrix> residual_cov;
      if (const json* b = find(*capm, "betas")) {
        betas = parse_vector(*b, "capm.betas", issues);
      } else {
        issues.add("capm.betas", "missing required field");
      }
      if (const json* c = find(*capm, "residual_cov")) {
        residual_cov = parse_matrix(*c, "capm.residual_cov", issues);
      } else {
        issues.add("capm.residual_cov", "missing required field");
      }
      if (mu && sigma && risk_free && betas && residual_cov) {
        try {
          spec.capm.emplace(*mu, *sigma, *risk_free, std::move(*betas),
                            std::move(*residual_cov));
        } catch (const DimensionError& e) {
          throw DimensionError(std::string("capm: ") + e.what());
        }
      }
    }
    const json* constraint = find(j, "constraint");
    if (!constraint) {
      issues.add("constraint", "missing required field for capm_* modes");
    } else if (!constraint->is_object()) {
      issues.add("constraint",
                 "expected an object, found " + type_name(*constraint));
    } else {
      check_keys(*constraint, "constraint", {"beta0"}, issues);
      spec.beta0 = require_number(*constraint, "beta0", "constraint", issues);
    }
  }

  // utility
  const json* utility = find(j, "utility");
  if (!utility) {
    issues.add("utility", "missing required field");
  } else if (!utility->is_object()) {
    issues.add("utility", "expected an object, found " + type_name(*utility));
  } else {
    check_keys(*utility, "utility", {"gamma", "gammas"}, issues);
    const auto gamma = require_number(*utility, "gamma", "utility", issues);
    std::vector<double> gammas;
    bool gammas_ok = true;
    if (const json* gs = find(*utility, "gammas")) {
      if (!gs->is_array()) {
        issues.add("utility.gammas",
                   "expected an array of numbers, found " + type_name(*gs));
        gammas_ok = false;
      } else {
        for (std::size_t i = 0; i < gs->size(); ++i) {
          const auto v = parse_finite(
              (*gs)[i], "utility.gammas[" + std::to_string(i) + "]", issues);
          if (!v) {
            gammas_ok = false;
            break;
          }
          gammas.push_back(*v);
        }
      }
    }
    if (gamma && gammas_ok) {
      try {
        spec.utility = UtilityParams(*gamma, std::move(gammas));
      } catch (const ParameterError& e) {
        issues.add("utility.gamma", e.what());
      }
    }
  }

  // benchmarks
  std::vector<Vector> benchmark_weights;
  if (const json* bench = find(j, "benchmarks")) {
    if (!bench->is_array()) {
      issues.add("benchmarks",
                 "expected an array of weight vectors, found " +
                     type_name(*bench));
    } else {
      for (std::size_t i = 0; i < bench->size(); ++i) {
        auto w = parse_vector((*bench)[i],
                              "benchmarks[" + std::to_string(i) + "]", issues);
        if (w) benchmark_weights.push_back(std::move(*w));
      }
    }
  }

  // portfolio
  std::optional<Vector> portfolio;
  if (const json* p = find(j, "portfolio")) {
    portfolio = parse_vector(*p, "portfolio", issues);
  }

  // simulation
  if (const json* sim = find(j, "simulation")) {
    if (!sim->is_object()) {
      issues.add("simulation",
                 "expected an object, found " + type_name(*sim));
    } else {
      check_keys(*sim, "simulation",
                 {"horizon", "steps", "paths", "seed", "scheme"}, issues);
      SimConfig cfg;
      if (const json* h = find(*sim, "horizon")) {
        if (const auto v = parse_finite(*h, "simulation.horizon", issues)) {
          if (*v > 0.0) {
            cfg.horizon = *v;
          } else {
            issues.add("simulation.horizon", "expected a positive number");
          }
        }
      }
      if (const json* s = find(*sim, "steps")) {
        if (!s->is_number_integer() || s->get<std::int64_t>() < 1) {
          issues.add("simulation.steps", "expected an integer >= 1");
        } else {
          cfg.steps = static_cast<int>(s->get<std::int64_t>());
        }
      }
      if (const json* p = find(*sim, "paths")) {
        if (!p->is_number_integer() || p->get<std::int64_t>() < 1) {
          issues.add("simulation.paths", "expected an integer >= 1");
        } else {
          cfg.paths = p->get<std::int64_t>();
        }
      }
      if (const json* s = find(*sim, "seed")) {
        if (!s->is_number_integer() ||
            (s->is_number_integer() && !s->is_number_unsigned() &&
             s->get<std::int64_t>() < 0)) {
          issues.add("simulation.seed", "expected a non-negative integer");
        } else {
          cfg.seed = s->get<std::uint64_t>();
        }
      }
      if (const json* s = find(*sim, "scheme")) {
        if (!s->is_string()) {
          issues.add("simulation.scheme",
                     "expected \"exact_log\" or \"euler_log\"");
        } else {
          const auto name = s->get<std::string>();
          if (name == "exact_log") {
            cfg.scheme = Scheme::exact_log;
          } else if (name == "euler_log") {
            cfg.scheme = Scheme::euler_log;
          } else {
            issues.add("simulation.scheme",
                       "expected \"exact_log\" or \"euler_log\", found \"" +
                           name + "\"");
          }
        }
      }
      spec.simulation = cfg;
    }
  }

  issues.raise_if_any();

  // Cross-field dimension checks: everything below throws DimensionError.
  const Eigen::Index n_decision =
      spec.mode == Mode::merton
          ? spec.market->n_assets()
          : (spec.mode == Mode::capm_investable ? spec.capm->n_assets() + 1
                                                : spec.capm->n_assets());

  if (benchmark_weights.size() != spec.utility.gammas.size()) {
    std::ostringstream os;
    os << "benchmarks: found " << benchmark_weights.size()
       << " weight vectors but utility.gammas has "
       << spec.utility.gammas.size() << " entries";
    throw DimensionError(os.str());
  }
  for (std::size_t i = 0; i < benchmark_weights.size(); ++i) {
    if (benchmark_weights[i].size() != n_decision) {
      std::ostringstream os;
      os << "benchmarks[" << i << "]: expected " << n_decision
         << " weights, found " << benchmark_weights[i].size();
      throw DimensionError(os.str());
    }
  }
  spec.benchmarks = BenchmarkSet(std::move(benchmark_weights));

  if (portfolio) {
    if (portfolio->size() != n_decision) {
      std::ostringstream os;
      os << "portfolio: expected " << n_decision << " weights, found "
         << portfolio->size();
      throw DimensionError(os.str());
    }
    spec.portfolio = Portfolio(std::move(*portfolio));
  }

  return spec;
}

json problem_to_json(const ProblemSpec& spec) {
  json out;
  out["mode"] = to_string(spec.mode);
  if (spec.market) {
    out["market"] = {{"drift", vector_to_json(spec.market->drift)},
                     {"covariance", matrix_to_json(spec.market->covariance)},
                     {"risk_free", spec.market->risk_free}};
  }
  if (spec.capm) {
    out["capm"] = {{"mu", spec.capm->mu},
                   {"sigma", spec.capm->sigma},
                   {"risk_free", spec.capm->risk_free},
                   {"betas", vector_to_json(spec.capm->betas)},
                   {"residual_cov", matrix_to_json(spec.capm->residual_cov)}};
  }
  if (spec.beta0) {
    out["constraint"] = {{"beta0", *spec.beta0}};
  }
  out["utility"] = {{"gamma", spec.utility.gamma},
                    {"gammas", spec.utility.gammas}};
  json bench = json::array();
  for (const auto& w : spec.benchmarks.weights) {
    bench.push_back(vector_to_json(w));
  }
  out["benchmarks"] = bench;
  if (spec.portfolio) {
    out["portfolio"] = vector_to_json(spec.portfolio->weights);
  }
  if (spec.simulation) {
    out["simulation"] = {{"horizon", spec.simulation->horizon},
                         {"steps", spec.simulation->steps},
                         {"paths", spec.simulation->paths},
                         {"seed", spec.simulation->seed},
                         {"scheme", scheme_to_string(spec.simulation->scheme)}};
  }
  return out;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SchemaError("cannot open problem file '" + path + "'");
  }
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports byte offset and line/column in the message
    throw SchemaError(std::string("parse error: ") + e.what(), path);
  } catch (const json::exception& e) {
    // e.g. number overflow while parsing
    throw SchemaError(std::string("parse error: ") + e.what(), path);
  }
  return problem_from_json(parsed);
}

std::string render_json(const json& j) { return j.dump(2) + "\n"; }

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw SchemaError("cannot open '" + tmp.string() + "' for writing");
    }
    out << content;
    if (!out) {
      throw SchemaError("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    throw SchemaError("cannot move report into place at '" + path +
                      "': " + ec.message());
  }
}

json findings_to_json(const std::vector<Finding>& findings) {
  json out = json::array();
  for (const auto& f : findings) {
    out.push_back({{"severity", f.severity == Severity::error ? "error"
                                                              : "warning"},
                   {"code", f.code},
                   {"message", f.message}});
  }
  return out;
}

}  // namespace powerfolio
