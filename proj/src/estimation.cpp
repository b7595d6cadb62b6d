#include "powerfolio/estimation.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace powerfolio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    // trim spaces and a trailing CR
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos
                        ? std::string{}
                        : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no,
                  std::size_t col_no) {
  std::ostringstream where;
  where << "line " << line_no << ", column " << col_no;
  if (cell.empty()) {
    throw SchemaError("missing cell (no imputation is performed)",
                      where.str());
  }
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw SchemaError("expected a decimal number, found '" + cell + "'",
                      where.str());
  }
  return value;
}

}  // namespace

ReturnsTable load_returns_csv(const std::string& path, double dt) {
  if (!(dt > 0.0)) {
    throw ParameterError("period length dt must be positive");
  }
  std::ifstream in(path);
  if (!in) {
    throw SchemaError("cannot open returns file '" + path + "'");
  }

  ReturnsTable table;
  table.dt = dt;

  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("returns file is empty", path);
  }
  table.names = split_csv_line(line);
  if (table.names.empty()) {
    throw SchemaError("header row has no columns", path);
  }
  const std::size_t n = table.names.size();

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n) {
      std::ostringstream os;
      os << "expected " << n << " cells, found " << cells.size();
      throw SchemaError(os.str(), "line " + std::to_string(line_no));
    }
    std::vector<double> row(n);
    for (std::size_t c = 0; c < n; ++c) {
      row[c] = parse_cell(cells[c], line_no, c + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw SchemaError("returns file has a header but no data rows", path);
  }

  table.returns.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      table.returns(static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

void save_returns_csv(const ReturnsTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw SchemaError("cannot open '" + path + "' for writing");
  }
  out.precision(17);
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    if (c) out << ',';
    out << table.names[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < table.returns.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.returns.cols(); ++c) {
      if (c) out << ',';
      out << table.returns(r, c);
    }
    out << '\n';
  }
}

MarketModel estimate_from_returns(const ReturnsTable& table,
                                  double risk_free) {
  const Eigen::Index n = table.n_assets();
  const Eigen::Index t_obs = table.n_periods();
  if (!(table.dt > 0.0)) {
    throw ParameterError("period length dt must be positive");
  }
  if (t_obs < n + 2) {
    ValidationReport report;
    std::ostringstream os;
    os << "need at least N + 2 = " << (n + 2) << " rows to estimate " << n
       << " assets, found " << t_obs;
    report.add(Severity::error, "insufficient_rows", os.str());
    throw ValidationFailure("too few return rows", std::move(report));
  }

  const Vector means = table.returns.colwise().mean();
  const Matrix centered = table.returns.rowwise() - means.transpose();
  const Matrix sample_cov =
      (centered.transpose() * centered) / static_cast<double>(t_obs - 1);

  MarketModel model(means / table.dt, sample_cov / table.dt, risk_free);
  ValidationReport report = validate_market(model);
  if (!report.ok) {
    throw ValidationFailure("estimated covariance failed validation",
                            std::move(report));
  }
  return model;
}

}  // namespace powerfolio
