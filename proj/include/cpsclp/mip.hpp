#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpsclp/model.hpp"

namespace cpsclp::mip {

enum class NodeSelection { BestBound, DepthFirst };
enum class BranchRule { MostFractional, PseudoCost };
enum class SolveStatus { Optimal, TimeLimit, Infeasible };

std::string to_string(SolveStatus status);

struct SolverParams {
  double time_limit = 900.0;
  double mip_gap = 0.0;
  double int_tol = 1e-9;
  double cone_tol = 1e-7;
  double tol_alpha_int = 1e-6;
  double tol_alpha_frac = 0.5;
  double tol_beta = 1e-8;
  double epsilon = 1e-8;
  NodeSelection node_selection = NodeSelection::BestBound;
  BranchRule branch_rule = BranchRule::MostFractional;
  int root_fractional_rounds = 3;
  /// Outer-approximation passes per node before branching anyway.
  int max_oa_rounds = 200;
  /// Seconds between progress lines at info level.
  double log_interval = 1.0;

  /// Throws std::invalid_argument on non-positive tolerances or negative gap.
  void check() const;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent;  // model variable order
  double nodes = 0.0;  // mean per master solve for multi-tree runs
  long bcuts = 0;
  long frbcuts = 0;
  long oa_cuts = 0;
  long lp_iterations = 0;
  double time = 0.0;
};

std::string to_json(const SolveReport& report);

/// Hook cuts are expressed over model variable indices.
struct CallbackHooks {
  /// Called with binaries snapped to {0,1}. Return violated cuts, or nothing to accept.
  std::function<std::vector<LinearRow>(const std::vector<double>&)> on_integer_candidate;
  /// Called at the root with binaries clamped to [0,1].
  std::function<std::vector<LinearRow>(const std::vector<double>&)> on_root_fractional;
};

/// LP-based branch-and-cut for models with linear rows, convex diagonal
/// quadratic objective terms and rotated cones.
SolveReport solve_mip(const ModelIR& model, const SolverParams& params = {},
                      const CallbackHooks* hooks = nullptr);

/// Root continuous relaxation converged by outer approximation.
/// `lower` is the last LP value; `upper` is the true objective of that LP
/// point once quadratic and cone terms are made exact (infinite when the
/// point cannot be repaired).
struct RelaxationResult {
  bool feasible = false;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  int rounds = 0;
};

RelaxationResult solve_relaxation(const ModelIR& model, double cone_tol = 1e-10, int max_rounds = 5000);

/// cv*v + cu*u + cy*y <= rhs
struct ConeCut {
  double cv = 0.0;
  double cu = 0.0;
  double cy = 0.0;
  double rhs = 0.0;
};

/// Supporting hyperplane of the cone ||(2v, u - y)|| <= u + y at the given
/// point; nothing when v^2 - u*y <= cone_tol * max(1, v^2).
std::optional<ConeCut> separate_cone_cut(double v, double u, double y, double cone_tol);

struct BoundChange {
  int var = -1;
  double lower = 0.0;
  double upper = 0.0;
};

struct Branching {
  int var = -1;
  std::vector<BoundChange> down;
  std::vector<BoundChange> up;
};

/// Most fractional binary (ties to the smallest index) and the two children
/// y <= 0 / y >= 1. Throws std::logic_error when every candidate is integral.
Branching branch(const std::vector<BoundChange>& node, const std::vector<double>& point,
                 const std::vector<int>& binaries, double int_tol);

}  // namespace cpsclp::mip
