#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpsclp/instance.hpp"
#include "cpsclp/mip.hpp"
#include "cpsclp/model.hpp"

namespace cpsclp::benders {

enum class CutOrigin { IntegerCandidate, RootFractional };

std::string to_string(CutOrigin origin);

/// phi + sum ry_i (y_i - y_anchor_i) + sum rv_i (v_i - v_anchor_i) >= target
struct BendersCut {
  double phi = 0.0;
  std::vector<double> ry, rv;
  std::vector<double> y_anchor, v_anchor;
  double target = 0.0;
  bool perturbed = false;
  CutOrigin origin = CutOrigin::IntegerCandidate;

  /// Left-hand side at (y, v).
  double lhs(const std::vector<double>& y, const std::vector<double>& v) const;
  /// Same inequality as a master row:  ry'y + rv'v >= target - phi + ry'y_anchor + rv'v_anchor.
  LinearRow to_row(const ModelLayout& master) const;
};

/// Components at or below tol_beta become epsilon.
std::pair<std::vector<double>, std::vector<double>> perturb(const std::vector<double>& y,
                                                            const std::vector<double>& v,
                                                            double epsilon, double tol_beta);

struct Evaluation {
  double phi = 0.0;            // at the unperturbed anchor
  double phi_perturbed = 0.0;  // LP value at the perturbed anchor (equals phi when not perturbed)
  std::optional<double> phi_direct;  // unperturbed LP value, computed on request
  std::vector<double> ry, rv;
  bool perturbed = false;
};

/// Subproblem LP kept across evaluations; only the fixing bounds change.
class Subproblem {
 public:
  Subproblem(const Instance& instance, const RobustConfig& config);

  /// Fixes (y, v) (or its perturbation) and returns the LP value and the
  /// reduced costs of the fixed columns. `direct` also solves the
  /// unperturbed LP so the back-converted value can be audited.
  Evaluation evaluate(const std::vector<double>& y_bar, const std::vector<double>& v_bar,
                      bool use_epsilon, const mip::SolverParams& params, bool direct = false);

  /// Optimal primal values of the last solve, in subproblem model order.
  const std::vector<double>& last_primal() const { return last_x_; }
  const ModelIR& model() const { return model_; }
  int num_facilities() const { return static_cast<int>(handles_.y.size()); }

 private:
  double solve_fixed(const std::vector<double>& y, const std::vector<double>& v);

  ModelIR model_;
  FixingHandles handles_;
  lp::LpProblem problem_;
  lp::Basis basis_;
  std::vector<double> caps_;
  std::vector<double> last_x_;
  std::vector<double> last_rc_;
};

/// Fills `diagnostic` and returns nothing when the anchor does not violate
/// the inequality (the perturbation was too coarse).
std::optional<BendersCut> make_cut(const Evaluation& eval, const std::vector<double>& y_bar,
                                   const std::vector<double>& v_bar, double target,
                                   std::string* diagnostic = nullptr);

/// phi / D < 1 - tol_alpha, with the integral or fractional tolerance.
bool violated(double phi, double target, bool is_integral, const mip::SolverParams& params);

/// Everything the drivers emitted; filled when passed to a driver.
struct Audit {
  std::vector<BendersCut> cuts;
  /// (back-converted phi, directly computed phi) for every perturbed evaluation.
  std::vector<std::pair<double, double>> phi_pairs;
  std::vector<std::string> diagnostics;
};

std::string cuts_to_json(const std::vector<BendersCut>& cuts);

/// Branch-and-cut on the master with lazy Benders cuts. Incumbent is in
/// master order (y, v, u).
mip::SolveReport solve_single_tree(const Instance& instance, const RobustConfig& config,
                                   const mip::SolverParams& params, bool use_epsilon,
                                   Audit* audit = nullptr);

/// Re-solves the master to optimality and adds one cut per round until the
/// master optimum covers D. Nodes is the mean over master solves, BCuts the
/// number of rounds that produced a cut.
mip::SolveReport solve_multi_tree(const Instance& instance, const RobustConfig& config,
                                  const mip::SolverParams& params, bool use_epsilon,
                                  Audit* audit = nullptr);

}  // namespace cpsclp::benders
