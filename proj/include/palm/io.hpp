#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "palm/outer.hpp"
#include "palm/problem.hpp"
#include "palm/types.hpp"

namespace palm::io {

inline constexpr const char* kTraceSchema = "# power-alm trace v1";
inline constexpr const char* kSummarySchema = "# power-alm summary v1";

/// Seventeen significant digits, enough to round-trip a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Compact form for file names and labels.
inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Trace CSV. The first ten columns are the stable schema; later columns are
/// diagnostics (both certificate residuals and the inner certificate).
inline std::string trace_csv(const OuterTrace& trace) {
  std::ostringstream os;
  os << kTraceSchema << '\n'
     << "k,beta,eps,sigma,pres,dres,f,ynorm,inner_iters,grad_evals_cum,"
        "dres_updated,dres_inner,inner_bound,inner_converged\n";
  for (const auto& r : trace.records) {
    os << r.k << ',' << fmt(r.beta) << ',' << fmt(r.eps) << ',' << fmt(r.sigma) << ','
       << fmt(r.pres) << ',' << fmt(r.dres) << ',' << fmt(r.f) << ',' << fmt(r.ynorm) << ','
       << r.inner_iters << ',' << r.grad_evals_cum << ',' << fmt(r.dres_updated) << ','
       << fmt(r.dres_inner) << ',' << fmt(r.inner_bound) << ',' << (r.inner_converged ? 1 : 0)
       << '\n';
  }
  return os.str();
}

struct SummaryRow {
  std::string experiment;
  std::uint64_t seed = 0;
  double nu = 1.0;
  double pres = 0.0;
  double dres = 0.0;
  long grad_evals = 0;
  double f = 0.0;
  std::optional<double> fstar;
  double wall_ms = 0.0;
  std::string status;
};

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << kSummarySchema << '\n'
     << "experiment,seed,nu,pres,dres,grad_evals,f,fstar,wall_ms,status\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.seed << ',' << fmt(r.nu) << ',' << fmt(r.pres) << ','
       << fmt(r.dres) << ',' << r.grad_evals << ',' << fmt(r.f) << ','
       << (r.fstar ? fmt(*r.fstar) : "") << ',' << fmt(r.wall_ms) << ',' << r.status << '\n';
  }
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Feature points, one per row, comma separated. A first row that does not
/// parse as numbers is taken as a header. Rows must agree in length.
inline Mat read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;
      throw Error(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(rows.front().size()) + " columns");
    rows.push_back(std::move(row));
  }
  require(!rows.empty() && !rows.front().empty(), "'" + path + "' holds no points");
  Mat pts(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index j = 0; j < pts.cols(); ++j) pts(i, j) = rows[i][j];
  return pts;
}

}  // namespace palm::io
