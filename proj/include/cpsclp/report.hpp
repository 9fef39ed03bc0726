#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cpsclp/benders.hpp"
#include "cpsclp/instance.hpp"
#include "cpsclp/mip.hpp"

namespace cpsclp {

enum class Method { Miqp, Misocp, StBen, StEpsBen, MtBen, MtEpsBen };

/// CLI spellings: miqp, misocp, st-ben, steps-ben, mt-ben, mteps-ben.
std::string to_string(Method method);
Method parse_method(const std::string& text);  // throws std::invalid_argument
bool is_benders(Method method);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One line of the metric tables. Unavailable numbers are NaN.
struct MetricsRow {
  std::string id;
  std::uint64_t seed = 0;
  double radius = 0.0;
  int gamma = 0;
  std::string mode;
  std::string method;
  double objval = kNaN;
  int nfac = 0;
  double opencost = kNaN;
  double congcost = kNaN;
  double load = kNaN;  // mean v over all facilities
  double cov = kNaN;
  double time_s = 0.0;
  double gap_pct = kNaN;
  double nodes = 0.0;
  long bcuts = 0;
  long frbcuts = 0;
  std::string status;
};

inline constexpr const char* kCsvHeader =
    "id,seed,R,gamma,mode,method,objval,nfac,opencost,congcost,load,cov,time_s,gap_pct,nodes,bcuts,"
    "frbcuts,status";

/// Two decimals for every real column, empty for NaN.
std::string to_csv_line(const MetricsRow& row);
std::string to_csv(const std::vector<MetricsRow>& rows);  // header + lines
/// Throws std::runtime_error on a wrong header or malformed line.
std::vector<MetricsRow> parse_csv(const std::string& text);

/// Full precision sidecar.
std::string to_json(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> rows_from_json(const std::string& text);

/// Metric values of a solution given by openings and assignments x[i][j].
/// Loads are recomputed as nominal load plus load protection, so the
/// decomposition ObjVal = OpenCost + CongCost holds exactly.
struct PointMetrics {
  std::vector<double> y;
  std::vector<double> v;
  double objval = 0.0;
  int nfac = 0;
  double opencost = 0.0;
  double congcost = 0.0;
  double load = 0.0;
  double cov = 0.0;
};

PointMetrics point_metrics(const Instance& instance, const RobustConfig& config,
                           const std::vector<double>& y, const std::vector<std::vector<double>>& x);

/// Assignments that realize the openings y at minimum cost (continuous
/// extended model with y fixed). Throws std::runtime_error when y is infeasible.
std::vector<std::vector<double>> recover_assignment(const Instance& instance, const RobustConfig& config,
                                                    const std::vector<double>& y,
                                                    const mip::SolverParams& params);

struct RunResult {
  mip::SolveReport report;
  MetricsRow row;
  benders::Audit audit;  // empty for direct methods
  std::vector<double> y;  // polished point, empty without incumbent
  std::vector<double> v;
};

/// Solves one cell and fills the metric row. Exceptions propagate.
RunResult run_method(const Instance& instance, const std::string& id, const RobustConfig& config,
                     Method method, const mip::SolverParams& params, bool audit = false);

}  // namespace cpsclp
