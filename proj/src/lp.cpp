#include "cpsclp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace cpsclp::lp {

std::string to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::IterationLimit: return "IterationLimit";
  }
  return "?";
}

int LpProblem::add_variable(double lower, double upper, double cost) {
  if (lower > upper) throw std::invalid_argument("variable lower bound exceeds upper bound");
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return num_vars() - 1;
}

int LpProblem::add_row(std::vector<int> index, std::vector<double> value, RowSense sense,
                       double rhs) {
  return add_row(SparseRow{std::move(index), std::move(value), sense, rhs});
}

int LpProblem::add_row(SparseRow row) {
  if (row.index.size() != row.value.size())
    throw std::invalid_argument("row index/value length mismatch");
  rows_.push_back(std::move(row));
  return num_rows() - 1;
}

void LpProblem::set_bounds(int var, double lo, double hi) {
  if (lo > hi)
    throw std::invalid_argument(fmt::format("set_bounds: lower {} exceeds upper {} for var {}",
                                            lo, hi, var));
  lower_.at(var) = lo;
  upper_.at(var) = hi;
}

void LpProblem::truncate_rows(int count) {
  if (count < num_rows()) rows_.resize(count);
}

void LpProblem::check() const {
  for (int j = 0; j < num_vars(); ++j) {
    if (std::isnan(cost_[j]) || std::isnan(lower_[j]) || std::isnan(upper_[j]))
      throw std::invalid_argument(fmt::format("NaN data on variable {}", j));
    if (lower_[j] > upper_[j])
      throw std::invalid_argument(fmt::format("lower > upper on variable {}", j));
  }
  for (int r = 0; r < num_rows(); ++r) {
    const auto& row = rows_[r];
    if (!std::isfinite(row.rhs)) throw std::invalid_argument(fmt::format("row {} rhs not finite", r));
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      if (row.index[k] < 0 || row.index[k] >= num_vars())
        throw std::invalid_argument(fmt::format("row {} references unknown variable", r));
      if (!std::isfinite(row.value[k]))
        throw std::invalid_argument(fmt::format("row {} has a non-finite coefficient", r));
    }
  }
}

namespace {

constexpr double kLooseTol = 1e-6;

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Working form: A x - r = 0 with one activity variable r_k per row, bounded
// by the row sense. Variables 0..n-1 are structural, n..n+m-1 are row
// activities (column -e_k). Minimization internally.
class Simplex {
 public:
  Simplex(const LpProblem& problem, const LpOptions& options)
      : opt_(options), n_(problem.num_vars()), m_(problem.num_rows()) {
    const int total = n_ + m_;
    lo_.resize(total);
    up_.resize(total);
    cost_.assign(total, 0.0);
    const double sign = problem.sense() == ObjSense::Maximize ? -1.0 : 1.0;
    for (int j = 0; j < n_; ++j) {
      lo_[j] = problem.lower(j);
      up_[j] = problem.upper(j);
      cost_[j] = sign * problem.cost(j);
      max_cost_ = std::max(max_cost_, std::abs(cost_[j]));
    }
    for (int k = 0; k < m_; ++k) {
      const auto& row = problem.row(k);
      switch (row.sense) {
        case RowSense::LessEqual: lo_[n_ + k] = -kInf; up_[n_ + k] = row.rhs; break;
        case RowSense::GreaterEqual: lo_[n_ + k] = row.rhs; up_[n_ + k] = kInf; break;
        case RowSense::Equal: lo_[n_ + k] = row.rhs; up_[n_ + k] = row.rhs; break;
      }
    }
    // column-major copy of A, duplicates summed
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int k = 0; k < m_; ++k) {
      const auto& row = problem.row(k);
      for (std::size_t t = 0; t < row.index.size(); ++t)
        if (row.value[t] != 0.0) cols[row.index[t]].push_back({k, row.value[t]});
    }
    col_start_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) {
      auto& c = cols[j];
      std::sort(c.begin(), c.end());
      int w = 0;
      for (std::size_t t = 0; t < c.size(); ++t) {
        if (w > 0 && c[w - 1].first == c[t].first)
          c[w - 1].second += c[t].second;
        else
          c[w++] = c[t];
      }
      c.resize(w);
      col_start_[j + 1] = col_start_[j] + w;
      for (const auto& [r, v] : c) {
        col_row_.push_back(r);
        col_val_.push_back(v);
      }
    }
    status_.assign(total, VarStatus::AtLower);
    x_.assign(total, 0.0);
    pos_.assign(total, -1);
    head_.assign(m_, -1);
    devex_.assign(total, 1.0);
  }

  LpSolution run(const Basis* warm) {
    if (!(warm && install_basis(*warm))) install_slack_basis();
    if (!refactor()) {
      install_slack_basis();
      if (!refactor()) throw NumericalError("slack basis factorization failed");
    }
    compute_primal();

    Status status = Status::IterationLimit;
    for (int pass = 0; pass < 6; ++pass) {
      if (!primal_feasible(opt_.tol_feas)) {
        compute_duals(cost_);
        if (dual_feasible(opt_.tol_dual)) {
          // an Infeasible verdict here is confirmed by phase one below
          if (dual_simplex() == Status::IterationLimit) return extract(Status::IterationLimit);
        }
        if (!primal_feasible(opt_.tol_feas)) {
          const Status phase_one = primal_simplex(true);
          if (phase_one == Status::IterationLimit) return extract(Status::IterationLimit);
          if (phase_one == Status::Infeasible) {
            if (!refactor()) throw NumericalError("refactorization failed");
            compute_primal();
            if (!primal_feasible(opt_.tol_feas)) {
              status = Status::Infeasible;
              break;
            }
          }
          if (!primal_feasible(opt_.tol_feas)) continue;
        }
      }
      status = primal_simplex(false);
      if (status != Status::Optimal) break;
      if (!refactor()) throw NumericalError("refactorization failed");
      compute_primal();
      compute_duals(cost_);
      if (primal_feasible(opt_.tol_feas) && dual_feasible(opt_.tol_dual)) break;
      status = Status::IterationLimit;
    }
    // near-parallel rows can make cleanup alternate between two bases that
    // each miss the tight tolerance by roundoff
    if (status == Status::IterationLimit && iterations_ < opt_.max_iterations) {
      compute_duals(cost_);
      if (primal_feasible(kLooseTol) && dual_feasible(kLooseTol * std::max(1.0, max_cost_))) status = Status::Optimal;
    }
    return extract(status);
  }

 private:
  // ---------------------------------------------------------------- basis
  bool is_fixed(int j) const { return lo_[j] == up_[j]; }

  VarStatus default_status(int j) const {
    if (std::isfinite(lo_[j])) return VarStatus::AtLower;
    if (std::isfinite(up_[j])) return VarStatus::AtUpper;
    return VarStatus::Free;
  }

  // Nonbasic statuses must point at finite bounds.
  VarStatus sanitize(int j, VarStatus s) const {
    if (s == VarStatus::AtLower && std::isfinite(lo_[j])) return s;
    if (s == VarStatus::AtUpper && std::isfinite(up_[j])) return s;
    if (s == VarStatus::Free && !std::isfinite(lo_[j]) && !std::isfinite(up_[j])) return s;
    return default_status(j);
  }

  double nonbasic_value(int j) const {
    switch (status_[j]) {
      case VarStatus::AtLower: return lo_[j];
      case VarStatus::AtUpper: return up_[j];
      default: return 0.0;
    }
  }

  void install_slack_basis() {
    for (int j = 0; j < n_; ++j) {
      status_[j] = default_status(j);
      pos_[j] = -1;
    }
    for (int k = 0; k < m_; ++k) {
      status_[n_ + k] = VarStatus::Basic;
      pos_[n_ + k] = k;
      head_[k] = n_ + k;
    }
    for (int j = 0; j < n_; ++j) x_[j] = nonbasic_value(j);
  }

  bool install_basis(const Basis& basis) {
    if (static_cast<int>(basis.columns.size()) > n_ || static_cast<int>(basis.rows.size()) > m_)
      return false;
    int basic = 0;
    for (int j = 0; j < n_ + m_; ++j) {
      VarStatus s;
      if (j < n_)
        s = j < static_cast<int>(basis.columns.size()) ? basis.columns[j] : default_status(j);
      else
        s = (j - n_) < static_cast<int>(basis.rows.size()) ? basis.rows[j - n_] : VarStatus::Basic;
      status_[j] = s == VarStatus::Basic ? s : sanitize(j, s);
      if (s == VarStatus::Basic) ++basic;
    }
    if (basic != m_) return false;
    int p = 0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::Basic) {
        pos_[j] = p;
        head_[p++] = j;
      } else {
        pos_[j] = -1;
        x_[j] = nonbasic_value(j);
      }
    }
    return true;
  }

  // ------------------------------------------------------- factorization
  bool refactor() {
    etas_.clear();
    kernel_cols_.clear();
    kernel_rows_.clear();
    row_kernel_.assign(m_, -1);
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (j < n_) kernel_cols_.push_back(j);
    }
    for (int k = 0; k < m_; ++k) {
      if (status_[n_ + k] != VarStatus::Basic) {
        row_kernel_[k] = static_cast<int>(kernel_rows_.size());
        kernel_rows_.push_back(k);
      }
    }
    if (kernel_rows_.size() != kernel_cols_.size()) return false;
    factor_pos_ = pos_;
    const int size = static_cast<int>(kernel_cols_.size());
    kernel_size_ = size;
    if (size == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    for (int c = 0; c < size; ++c) {
      const int j = kernel_cols_[c];
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) {
        const int rk = row_kernel_[col_row_[t]];
        if (rk >= 0) trips.emplace_back(rk, c, col_val_[t]);
      }
    }
    SpMat kernel(size, size);
    kernel.setFromTriplets(trips.begin(), trips.end());
    kernel.makeCompressed();
    lu_.analyzePattern(kernel);
    lu_.factorize(kernel);
    if (lu_.info() != Eigen::Success) return false;
    return std::isfinite(lu_.logAbsDeterminant());
  }

  // dense column of variable j over rows
  void load_column(int j, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (j < n_) {
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) out[col_row_[t]] = col_val_[t];
    } else {
      out[j - n_] = -1.0;
    }
  }

  // Solves B z = a; a indexed by row, z by basis position.
  void ftran(const std::vector<double>& a, std::vector<double>& z) const {
    z.assign(m_, 0.0);
    Eigen::VectorXd zs;
    if (kernel_size_ > 0) {
      Eigen::VectorXd rhs(kernel_size_);
      for (int rk = 0; rk < kernel_size_; ++rk) rhs[rk] = a[kernel_rows_[rk]];
      zs = lu_.solve(rhs);
    }
    std::vector<double> acc(m_, 0.0);
    for (int c = 0; c < kernel_size_; ++c) {
      const int j = kernel_cols_[c];
      z[pos_at_factor(j)] = zs[c];
      if (zs[c] == 0.0) continue;
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t)
        if (row_kernel_[col_row_[t]] < 0) acc[col_row_[t]] += col_val_[t] * zs[c];
    }
    for (int k = 0; k < m_; ++k)
      if (row_kernel_[k] < 0) z[pos_at_factor(n_ + k)] = acc[k] - a[k];
    for (const auto& eta : etas_) {
      const double zp = z[eta.pivot_pos] / eta.pivot;
      z[eta.pivot_pos] = zp;
      if (zp == 0.0) continue;
      for (const auto& [p, v] : eta.entries) z[p] -= v * zp;
    }
  }

  // Solves y' B = c'; c indexed by basis position, y by row.
  void btran(std::vector<double> c, std::vector<double>& y) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = c[it->pivot_pos];
      for (const auto& [p, v] : it->entries) s -= v * c[p];
      c[it->pivot_pos] = s / it->pivot;
    }
    y.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k)
      if (row_kernel_[k] < 0) y[k] = -c[pos_at_factor(n_ + k)];
    if (kernel_size_ == 0) return;
    Eigen::VectorXd rhs(kernel_size_);
    for (int col = 0; col < kernel_size_; ++col) {
      const int j = kernel_cols_[col];
      double s = c[pos_at_factor(j)];
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) {
        const int r = col_row_[t];
        if (row_kernel_[r] < 0) s += col_val_[t] * c[pos_at_factor(n_ + r)];
      }
      rhs[col] = s;
    }
    Eigen::VectorXd w = lu_.transpose().solve(rhs);
    for (int rk = 0; rk < kernel_size_; ++rk) y[kernel_rows_[rk]] = w[rk];
  }

  // Basis positions are stable across etas but the factor describes the
  // basis at refactor time; this maps a variable to its position then.
  int pos_at_factor(int j) const { return factor_pos_[j]; }

  // ------------------------------------------------------------ values
  void compute_primal() {
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      x_[j] = nonbasic_value(j);
      if (x_[j] == 0.0) continue;
      if (j < n_) {
        for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) rhs[col_row_[t]] -= col_val_[t] * x_[j];
      } else {
        rhs[j - n_] += x_[j];
      }
    }
    std::vector<double> z;
    ftran(rhs, z);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = z[p];
  }

  void compute_duals(const std::vector<double>& cost) {
    std::vector<double> cb(m_);
    for (int p = 0; p < m_; ++p) cb[p] = cost[head_[p]];
    btran(std::move(cb), y_);
    d_.assign(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      double s = cost[j];
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) s -= y_[col_row_[t]] * col_val_[t];
      d_[j] = s;
    }
    for (int k = 0; k < m_; ++k)
      if (status_[n_ + k] != VarStatus::Basic) d_[n_ + k] = cost[n_ + k] + y_[k];
  }

  double infeasibility(int j, double tol) const {
    if (x_[j] < lo_[j] - tol) return lo_[j] - x_[j];
    if (x_[j] > up_[j] + tol) return x_[j] - up_[j];
    return 0.0;
  }

  bool primal_feasible(double tol) const {
    for (int p = 0; p < m_; ++p)
      if (infeasibility(head_[p], scaled(tol, head_[p])) > 0.0) return false;
    return true;
  }

  double scaled(double tol, int j) const {
    double mag = std::abs(x_[j]);
    return tol * std::max(1.0, mag);
  }

  bool dual_feasible(double tol) const {
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::Basic || is_fixed(j)) continue;
      const double d = d_[j];
      switch (status_[j]) {
        case VarStatus::AtLower: if (d < -tol) return false; break;
        case VarStatus::AtUpper: if (d > tol) return false; break;
        case VarStatus::Free: if (std::abs(d) > tol) return false; break;
        default: break;
      }
    }
    return true;
  }

  // ------------------------------------------------------------ pivoting
  struct Eta {
    int pivot_pos;
    double pivot;
    std::vector<std::pair<int, double>> entries;
  };

  bool pivot(int entering, int leave_pos, const std::vector<double>& alpha,
             VarStatus leaving_status) {
    const int leaving = head_[leave_pos];
    Eta eta{leave_pos, alpha[leave_pos], {}};
    for (int p = 0; p < m_; ++p)
      if (p != leave_pos && alpha[p] != 0.0) eta.entries.push_back({p, alpha[p]});
    etas_.push_back(std::move(eta));
    status_[leaving] = leaving_status;
    pos_[leaving] = -1;
    x_[leaving] = nonbasic_value(leaving);
    status_[entering] = VarStatus::Basic;
    pos_[entering] = leave_pos;
    head_[leave_pos] = entering;
    ++iterations_;
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!refactor()) return false;
      compute_primal();
    }
    return true;
  }

  bool recover() {
    // singular basis after a pivot: fall back to the slack basis
    if (++recoveries_ > 3) return false;
    install_slack_basis();
    if (!refactor()) return false;
    compute_primal();
    return true;
  }

  // Primal simplex; phase one minimizes the sum of basic infeasibilities.
  Status primal_simplex(bool phase_one) {
    std::vector<double> cost(n_ + m_, 0.0);
    std::vector<double> alpha, column(m_), rho, row_alpha;
    int degenerate_run = 0;
    bool bland = false;
    std::fill(devex_.begin(), devex_.end(), 1.0);
    if (!refactor() && !recover()) throw NumericalError("factorization failed");
    compute_primal();
    if (!phase_one && !primal_feasible(opt_.tol_feas)) return Status::Optimal;  // caller re-checks
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::IterationLimit;
      if (phase_one) {
        std::fill(cost.begin(), cost.end(), 0.0);
        bool any = false;
        for (int p = 0; p < m_; ++p) {
          const int j = head_[p];
          const double tol = scaled(opt_.tol_feas, j);
          if (x_[j] < lo_[j] - tol) { cost[j] = -1.0; any = true; }
          else if (x_[j] > up_[j] + tol) { cost[j] = 1.0; any = true; }
        }
        if (!any) return Status::Optimal;
      }
      compute_duals(phase_one ? cost : cost_);

      // pricing
      int entering = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < n_ + m_; ++j) {
        if (status_[j] == VarStatus::Basic || is_fixed(j)) continue;
        const double d = d_[j];
        int jdir = 0;
        if (d < -opt_.tol_dual && status_[j] != VarStatus::AtUpper) jdir = 1;
        else if (d > opt_.tol_dual && status_[j] != VarStatus::AtLower) jdir = -1;
        if (jdir == 0) continue;
        if (bland) { entering = j; dir = jdir; break; }
        const double score = d * d / devex_[j];
        if (score > best) { best = score; entering = j; dir = jdir; }
      }
      if (entering < 0) {
        if (phase_one) return Status::Infeasible;  // infeasibility cannot be reduced
        return Status::Optimal;
      }

      load_column(entering, column);
      ftran(column, alpha);

      // Harris two-pass ratio test over basic variables
      auto limit = [&](int p, bool relaxed, VarStatus& hit) -> double {
        const int j = head_[p];
        const double rate = -dir * alpha[p];
        if (std::abs(alpha[p]) <= opt_.tol_pivot) return kInf;
        const double tol = relaxed ? scaled(opt_.tol_feas, j) : 0.0;
        if (rate < 0.0) {
          double bound;
          if (phase_one && x_[j] > up_[j] + scaled(opt_.tol_feas, j)) { bound = up_[j]; hit = VarStatus::AtUpper; }
          else if (phase_one && x_[j] < lo_[j] - scaled(opt_.tol_feas, j)) return kInf;
          else { bound = lo_[j]; hit = VarStatus::AtLower; }
          if (!std::isfinite(bound)) return kInf;
          return std::max(0.0, (x_[j] - bound + tol) / -rate);
        }
        double bound;
        if (phase_one && x_[j] < lo_[j] - scaled(opt_.tol_feas, j)) { bound = lo_[j]; hit = VarStatus::AtLower; }
        else if (phase_one && x_[j] > up_[j] + scaled(opt_.tol_feas, j)) return kInf;
        else { bound = up_[j]; hit = VarStatus::AtUpper; }
        if (!std::isfinite(bound)) return kInf;
        return std::max(0.0, (bound - x_[j] + tol) / rate);
      };

      double theta_relaxed = kInf;
      VarStatus dummy;
      for (int p = 0; p < m_; ++p) theta_relaxed = std::min(theta_relaxed, limit(p, !bland, dummy));
      int leave_pos = -1;
      double theta = kInf;
      VarStatus leave_status = VarStatus::AtLower;
      if (std::isfinite(theta_relaxed)) {
        double best_alpha = -1.0;
        int best_var = -1;
        for (int p = 0; p < m_; ++p) {
          VarStatus hit = VarStatus::AtLower;
          const double ratio = limit(p, false, hit);
          if (!std::isfinite(ratio)) continue;
          if (bland) {
            if (ratio < theta - 1e-12 ||
                (ratio <= theta + 1e-12 && head_[p] < best_var)) {
              theta = ratio; leave_pos = p; leave_status = hit; best_var = head_[p];
            }
          } else if (ratio <= theta_relaxed && std::abs(alpha[p]) > best_alpha) {
            best_alpha = std::abs(alpha[p]);
            theta = ratio; leave_pos = p; leave_status = hit;
          }
        }
      }

      const double span = up_[entering] - lo_[entering];
      if (std::isfinite(span) && span <= theta) {
        // bound flip, no basis change
        const double step = dir * span;
        for (int p = 0; p < m_; ++p) x_[head_[p]] -= alpha[p] * step;
        status_[entering] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[entering] = nonbasic_value(entering);
        ++iterations_;
        degenerate_run = 0;
        bland = false;
        continue;
      }
      if (leave_pos < 0) {
        if (phase_one) {
          // numerical trouble; refactor and retry once before giving up
          if (!refactor() && !recover()) throw NumericalError("factorization failed");
          compute_primal();
          if (++phase_one_retries_ > 5) return Status::Infeasible;
          continue;
        }
        return Status::Unbounded;
      }

      // devex reference weights
      if (!bland) {
        std::vector<double> unit(m_, 0.0);
        unit[leave_pos] = 1.0;
        btran(unit, rho);
        const double ap = alpha[leave_pos];
        const double wq = devex_[entering];
        for (int j = 0; j < n_ + m_; ++j) {
          if (status_[j] == VarStatus::Basic || j == entering) continue;
          double arj;
          if (j < n_) {
            arj = 0.0;
            for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) arj += rho[col_row_[t]] * col_val_[t];
          } else {
            arj = -rho[j - n_];
          }
          if (arj == 0.0) continue;
          const double ratio = arj / ap;
          devex_[j] = std::max(devex_[j], ratio * ratio * wq);
        }
        devex_[head_[leave_pos]] = std::max(wq / (ap * ap), 1.0);
      }

      const double step = dir * theta;
      for (int p = 0; p < m_; ++p) x_[head_[p]] -= alpha[p] * step;
      x_[entering] += step;
      if (theta <= 1e-12) {
        if (++degenerate_run > opt_.stall_threshold) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      if (!pivot(entering, leave_pos, alpha, leave_status)) {
        if (!recover()) throw NumericalError("factorization failed");
        return Status::Optimal;  // caller re-checks from the slack basis
      }
    }
  }

  // Dual simplex from a dual feasible basis.
  Status dual_simplex() {
    std::vector<double> alpha, column(m_), rho, unit(m_);
    std::vector<double> row_alpha(n_ + m_, 0.0);
    int degenerate_run = 0;
    bool bland = false;
    if (!refactor() && !recover()) throw NumericalError("factorization failed");
    compute_primal();
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::IterationLimit;
      compute_duals(cost_);
      if (!dual_feasible(opt_.tol_dual * 10.0)) return Status::Optimal;  // let primal finish

      int leave_pos = -1;
      double worst = 0.0;
      for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        const double inf = infeasibility(j, scaled(opt_.tol_feas, j));
        if (inf <= 0.0) continue;
        if (bland) {
          if (leave_pos < 0 || j < head_[leave_pos]) leave_pos = p;
          continue;
        }
        if (inf > worst) { worst = inf; leave_pos = p; }
      }
      if (leave_pos < 0) return Status::Optimal;
      const int leaving = head_[leave_pos];
      const bool to_lower = x_[leaving] < lo_[leaving];
      const double target = to_lower ? lo_[leaving] : up_[leaving];

      std::fill(unit.begin(), unit.end(), 0.0);
      unit[leave_pos] = 1.0;
      btran(unit, rho);

      // eligible entering candidates and ratio |d_j / alpha_rj|
      auto candidate_ratio = [&](int j, double arj, bool relaxed) -> double {
        if (std::abs(arj) <= opt_.tol_pivot) return kInf;
        // leaving must move up when to_lower: delta x_r = -arj * delta x_j
        const bool up_ok = status_[j] != VarStatus::AtUpper;
        const bool down_ok = status_[j] != VarStatus::AtLower;
        bool ok;
        if (to_lower) ok = (arj < 0 && up_ok) || (arj > 0 && down_ok);
        else ok = (arj > 0 && up_ok) || (arj < 0 && down_ok);
        if (!ok) return kInf;
        double d = d_[j];
        if (status_[j] == VarStatus::AtLower) d = std::max(d, 0.0);
        else if (status_[j] == VarStatus::AtUpper) d = std::min(d, 0.0);
        return (std::abs(d) + (relaxed ? opt_.tol_dual : 0.0)) / std::abs(arj);
      };
      double theta_relaxed = kInf;
      for (int j = 0; j < n_ + m_; ++j) {
        row_alpha[j] = 0.0;
        if (status_[j] == VarStatus::Basic || is_fixed(j)) continue;
        double arj;
        if (j < n_) {
          arj = 0.0;
          for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) arj += rho[col_row_[t]] * col_val_[t];
        } else {
          arj = -rho[j - n_];
        }
        row_alpha[j] = arj;
        theta_relaxed = std::min(theta_relaxed, candidate_ratio(j, arj, !bland));
      }
      if (!std::isfinite(theta_relaxed)) return Status::Infeasible;
      int entering = -1;
      double best_alpha = -1.0;
      double theta_exact = kInf;
      for (int j = 0; j < n_ + m_; ++j) {
        if (status_[j] == VarStatus::Basic || is_fixed(j)) continue;
        const double ratio = candidate_ratio(j, row_alpha[j], false);
        if (!std::isfinite(ratio)) continue;
        if (bland) {
          if (ratio < theta_exact - 1e-12) { theta_exact = ratio; entering = j; }
        } else if (ratio <= theta_relaxed && std::abs(row_alpha[j]) > best_alpha) {
          best_alpha = std::abs(row_alpha[j]);
          entering = j;
          theta_exact = ratio;
        }
      }
      if (entering < 0) return Status::Infeasible;
      if (theta_exact <= 1e-12) {
        if (++degenerate_run > opt_.stall_threshold) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      load_column(entering, column);
      ftran(column, alpha);
      if (std::abs(alpha[leave_pos]) <= opt_.tol_pivot * 1e-3) {
        // row and column disagree numerically; refactor and retry
        if (!refactor() && !recover()) throw NumericalError("factorization failed");
        compute_primal();
        if (++dual_retries_ > 20) return Status::Optimal;
        continue;
      }
      const double delta = (x_[leaving] - target) / alpha[leave_pos];
      for (int p = 0; p < m_; ++p) x_[head_[p]] -= alpha[p] * delta;
      x_[entering] += delta;
      if (!pivot(entering, leave_pos, alpha, to_lower ? VarStatus::AtLower : VarStatus::AtUpper)) {
        if (!recover()) throw NumericalError("factorization failed");
        return Status::Optimal;  // primal simplex resumes from the slack basis
      }
    }
  }

  LpSolution extract(Status status) {
    LpSolution sol;
    sol.status = status;
    sol.iterations = iterations_;
    const double sign = cost_sign_;
    sol.x.assign(x_.begin(), x_.begin() + n_);
    sol.basis.columns.assign(status_.begin(), status_.begin() + n_);
    sol.basis.rows.assign(status_.begin() + n_, status_.end());
    if (status != Status::Optimal) return sol;
    // snap nonbasic values exactly onto their bounds
    for (int j = 0; j < n_; ++j)
      if (status_[j] != VarStatus::Basic) sol.x[j] = nonbasic_value(j);
    compute_duals(cost_);
    sol.row_duals.resize(m_);
    sol.reduced_costs.assign(n_, 0.0);
    for (int k = 0; k < m_; ++k) sol.row_duals[k] = sign * y_[k];
    for (int j = 0; j < n_; ++j)
      if (status_[j] != VarStatus::Basic) sol.reduced_costs[j] = sign * d_[j];
    sol.row_activity.assign(m_, 0.0);
    for (int j = 0; j < n_; ++j)
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t)
        sol.row_activity[col_row_[t]] += col_val_[t] * sol.x[j];
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += cost_[j] * sol.x[j];
    sol.objective = sign * obj;
    return sol;
  }

 public:
  double cost_sign_ = 1.0;

 private:
  LpOptions opt_;
  int n_;
  int m_;
  std::vector<double> lo_, up_, cost_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<VarStatus> status_;
  std::vector<double> x_;
  std::vector<int> pos_, head_;
  std::vector<int> factor_pos_;
  std::vector<double> y_, d_, devex_;
  std::vector<Eta> etas_;
  std::vector<int> kernel_cols_, kernel_rows_, row_kernel_;
  int kernel_size_ = 0;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  int iterations_ = 0;
  double max_cost_ = 0.0;
  int recoveries_ = 0;
  int phase_one_retries_ = 0;
  int dual_retries_ = 0;
};

}  // namespace

LpSolution solve(const LpProblem& problem, const Basis* warm_basis, const LpOptions& options) {
  problem.check();
  Simplex simplex(problem, options);
  simplex.cost_sign_ = problem.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  return simplex.run(warm_basis);
}

std::string to_lp_text(const LpProblem& problem, const std::vector<std::string>& names) {
  auto name = [&](int j) { return j < static_cast<int>(names.size()) ? names[j] : fmt::format("x{}", j); };
  std::ostringstream out;
  out << (problem.sense() == ObjSense::Minimize ? "Minimize\n obj:" : "Maximize\n obj:");
  for (int j = 0; j < problem.num_vars(); ++j)
    if (problem.cost(j) != 0.0) out << fmt::format(" {:+.17g} {}", problem.cost(j), name(j));
  out << "\nSubject To\n";
  for (int r = 0; r < problem.num_rows(); ++r) {
    const auto& row = problem.row(r);
    out << fmt::format(" c{}:", r);
    for (std::size_t t = 0; t < row.index.size(); ++t)
      out << fmt::format(" {:+.17g} {}", row.value[t], name(row.index[t]));
    const char* op = row.sense == RowSense::LessEqual ? "<=" : row.sense == RowSense::GreaterEqual ? ">=" : "=";
    out << fmt::format(" {} {:.17g}\n", op, row.rhs);
  }
  out << "Bounds\n";
  for (int j = 0; j < problem.num_vars(); ++j) {
    const double lo = problem.lower(j), hi = problem.upper(j);
    if (std::isinf(lo) && std::isinf(hi)) out << fmt::format(" {} free\n", name(j));
    else if (std::isinf(hi)) out << fmt::format(" {} >= {:.17g}\n", name(j), lo);
    else if (std::isinf(lo)) out << fmt::format(" -inf <= {} <= {:.17g}\n", name(j), hi);
    else out << fmt::format(" {:.17g} <= {} <= {:.17g}\n", lo, name(j), hi);
  }
  out << "End\n";
  return out.str();
}

}  // namespace cpsclp::lp
