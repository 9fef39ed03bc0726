#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpsclp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ObjSense { Minimize, Maximize };
enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(Status status);

struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

/// Row-major LP: optimize c'x subject to row constraints and variable bounds.
class LpProblem {
 public:
  int add_variable(double lower, double upper, double cost);
  int add_row(std::vector<int> index, std::vector<double> value, RowSense sense, double rhs);
  int add_row(SparseRow row);

  /// Throws std::invalid_argument when lo > hi.
  void set_bounds(int var, double lo, double hi);
  void set_cost(int var, double cost) { cost_.at(var) = cost; }
  void set_sense(ObjSense sense) { sense_ = sense; }
  /// Drops every row with index >= count.
  void truncate_rows(int count);

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  ObjSense sense() const { return sense_; }
  double cost(int var) const { return cost_[var]; }
  double lower(int var) const { return lower_[var]; }
  double upper(int var) const { return upper_[var]; }
  const SparseRow& row(int r) const { return rows_[r]; }
  const std::vector<SparseRow>& rows() const { return rows_; }
  const std::vector<double>& costs() const { return cost_; }
  const std::vector<double>& lowers() const { return lower_; }
  const std::vector<double>& uppers() const { return upper_; }

  /// Throws std::invalid_argument on NaN data, non-finite rhs, bad indices or lo > hi.
  void check() const;

 private:
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<SparseRow> rows_;
  ObjSense sense_ = ObjSense::Minimize;
};

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

/// Simplex basis snapshot. Rows added after the snapshot was taken start with
/// their slack basic; added columns start nonbasic.
struct Basis {
  std::vector<VarStatus> columns;
  std::vector<VarStatus> rows;
  bool empty() const { return columns.empty() && rows.empty(); }
  friend bool operator==(const Basis&, const Basis&) = default;
};

struct LpOptions {
  double tol_feas = 1e-9;
  double tol_dual = 1e-9;
  double tol_pivot = 1e-9;
  int max_iterations = 200000;
  int refactor_interval = 100;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int stall_threshold = 60;
};

struct LpSolution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> row_activity;
  /// d(objective)/d(rhs) for each row, in the problem's own sense.
  std::vector<double> row_duals;
  /// c_j - a_j' row_duals: the objective rate per unit of x_j while the basis stays optimal.
  std::vector<double> reduced_costs;
  Basis basis;
  int iterations = 0;
};

/// Factorization failed even after refactorization retries.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded-variable revised simplex. Deterministic for identical inputs.
LpSolution solve(const LpProblem& problem, const Basis* warm_basis = nullptr,
                 const LpOptions& options = {});

/// Convenience wrapper around LpProblem::set_bounds.
inline void set_bounds(LpProblem& problem, int var, double lo, double hi) {
  problem.set_bounds(var, lo, hi);
}

/// Plain-text dump in CPLEX-LP style. Variables are named by `names` when
/// given, else x0, x1, ...
std::string to_lp_text(const LpProblem& problem, const std::vector<std::string>& names = {});

}  // namespace cpsclp::lp
