#pragma once
// Problem files and reports. A problem is a JSON object (a key/value tree
// with nested sections); reports are JSON rendered with sorted keys and
// two-space indentation so identical runs produce identical bytes.

#include <optional>
#include <string>

#include "json.hpp"
#include "powerfolio/market.hpp"
#include "powerfolio/objective.hpp"
#include "powerfolio/simulator.hpp"

namespace powerfolio {

enum class Mode { merton, capm_investable, capm_noninvestable };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// A fully validated problem. `market` is set for merton mode, `capm` and
/// `beta0` for the two constrained modes. Benchmarks run over the N risky
/// assets, except in capm_investable mode where they run over the N+1 assets
/// of the assembled market (the benchmark asset first).
struct ProblemSpec {
  Mode mode = Mode::merton;
  std::optional<MarketModel> market;
  std::optional<CapmModel> capm;
  UtilityParams utility;
  BenchmarkSet benchmarks;
  std::optional<double> beta0;
  std::optional<SimConfig> simulation;
  std::optional<Portfolio> portfolio;
};

/// Validate and convert. Schema problems (missing/unknown/ill-typed fields,
/// non-finite numbers) raise SchemaError listing every offending field path;
/// mutually inconsistent dimensions raise DimensionError.
ProblemSpec problem_from_json(const nlohmann::json& j);

/// Canonical JSON form; problem_from_json(problem_to_json(s)) == s and the
/// rendering of a canonical form is byte-stable.
nlohmann::json problem_to_json(const ProblemSpec& spec);

/// Read and validate a problem file. Parse errors carry the line/column
/// reported by the JSON parser.
ProblemSpec load_problem(const std::string& path);

/// Canonical rendering: two-space indent, sorted keys, trailing newline.
std::string render_json(const nlohmann::json& j);

/// Write-temp-then-rename so a reader never observes a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

nlohmann::json findings_to_json(const std::vector<Finding>& findings);

}  // namespace powerfolio
