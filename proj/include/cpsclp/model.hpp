#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpsclp/instance.hpp"
#include "cpsclp/lp.hpp"

namespace cpsclp {

enum class VarKind { Binary, Continuous };

struct VarDecl {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = lp::kInf;
  double obj = 0.0;
  double qobj = 0.0;  // coefficient of x^2 in the objective
};

struct LinearRow {
  std::vector<int> index;
  std::vector<double> value;
  lp::RowSense sense = lp::RowSense::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// v^2 <= u * y with u, y >= 0.
struct RotatedCone {
  int v = -1;
  int u = -1;
  int y = -1;
};

enum class FormulationKind {
  DeterministicMiqp,
  ExtendedRobustMiqp,
  PerspectiveMisocp,
  BendersMaster,
  BendersSubproblem
};

std::string to_string(FormulationKind kind);

/// Variable families by facility / customer / (i, j) pair. Absent families
/// are empty (or -1 for tau).
struct ModelLayout {
  std::vector<std::pair<int, int>> pairs;  // (i, j) with i in I(j), grouped by j
  std::vector<int> y, v, u, rho, pi, x, sigma;  // x, sigma indexed like pairs
  int tau = -1;
};

class ModelIR {
 public:
  FormulationKind kind = FormulationKind::DeterministicMiqp;
  lp::ObjSense sense = lp::ObjSense::Minimize;
  std::vector<VarDecl> vars;
  std::vector<LinearRow> rows;
  std::vector<RotatedCone> cones;
  ModelLayout layout;

  int add_var(VarDecl decl);
  int add_row(LinearRow row);
  int var(const std::string& name) const;  // throws std::out_of_range
  bool has_var(const std::string& name) const { return var_index_.count(name) > 0; }
  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  /// Linear part only; variable and row positions are preserved.
  lp::LpProblem to_lp() const;

  /// Objective value at `x`, including quadratic terms.
  double objective(const std::vector<double>& x) const;

  /// Throws std::logic_error on dangling references, bad bounds or a
  /// quadratic term on a coned v.
  void check() const;

 private:
  std::unordered_map<std::string, int> var_index_;
};

/// LP-style text with quadratic terms and cones as comment lines.
std::string to_lp_text(const ModelIR& model);

ModelIR build_deterministic(const Instance& instance);
ModelIR build_extended_robust(const Instance& instance, const RobustConfig& config);
ModelIR build_perspective(const Instance& instance, const RobustConfig& config);
ModelIR build_master(const Instance& instance, const RobustConfig& config);

/// Positions of the y and v columns inside the subproblem LP.
struct FixingHandles {
  std::vector<int> y;
  std::vector<int> v;

  /// Pins y = y_bar and v = v_bar through bounds.
  void fix(lp::LpProblem& problem, const std::vector<double>& y_bar,
           const std::vector<double>& v_bar) const;
};

std::pair<ModelIR, FixingHandles> build_subproblem(const Instance& instance,
                                                   const RobustConfig& config);

}  // namespace cpsclp
