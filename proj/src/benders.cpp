#include "cpsclp/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "cpsclp/log.hpp"
#include "json.hpp"

namespace cpsclp::benders {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// reduced costs are non-negative up to LP noise
double clean_rc(double r) { return r < 0.0 && r > -1e-7 ? 0.0 : r; }

class CutPool {
 public:
  /// False when an identical cut (within 1e-12) is already present.
  bool insert(const LinearRow& row) {
    for (const auto& r : rows_) {
      if (r.index != row.index || std::abs(r.rhs - row.rhs) > 1e-12) continue;
      bool same = true;
      for (std::size_t k = 0; k < r.value.size() && same; ++k) same = std::abs(r.value[k] - row.value[k]) <= 1e-12;
      if (same) return false;
    }
    rows_.push_back(row);
    return true;
  }

 private:
  std::vector<LinearRow> rows_;
};

struct Anchor {
  std::vector<double> y, v;
  bool integral = true;
};

Anchor read_anchor(const ModelLayout& layout, const std::vector<double>& point, const Instance& inst,
                   double int_tol) {
  Anchor a;
  for (std::size_t i = 0; i < layout.y.size(); ++i) {
    const double y = std::clamp(point[layout.y[i]], 0.0, 1.0);
    if (std::abs(y - std::round(y)) > int_tol) a.integral = false;
    a.y.push_back(y);
    a.v.push_back(std::clamp(point[layout.v[i]], 0.0, inst.load_cap(static_cast<int>(i))));
  }
  return a;
}

// Evaluates at the anchor and builds a cut when it is violated. Falls back to
// the unperturbed evaluation when the perturbed cut does not separate.
std::optional<BendersCut> separate(Subproblem& sub, const Anchor& a, double target, bool use_epsilon,
                                   const mip::SolverParams& params, CutOrigin origin, Audit* audit) {
  auto eval = sub.evaluate(a.y, a.v, use_epsilon, params, audit != nullptr && use_epsilon);
  if (audit && eval.phi_direct) audit->phi_pairs.emplace_back(eval.phi, *eval.phi_direct);
  if (!violated(eval.phi, target, a.integral, params)) return std::nullopt;
  std::string diag;
  auto cut = make_cut(eval, a.y, a.v, target, &diag);
  if (!cut && use_epsilon) {
    if (audit) audit->diagnostics.push_back(diag);
    log_at(LogLevel::Info, "{}", diag);
    eval = sub.evaluate(a.y, a.v, false, params);
    if (!violated(eval.phi, target, a.integral, params)) return std::nullopt;
    cut = make_cut(eval, a.y, a.v, target, &diag);
  }
  if (!cut) throw std::runtime_error(diag);
  cut->origin = origin;
  return cut;
}

}  // namespace

std::string to_string(CutOrigin origin) {
  return origin == CutOrigin::IntegerCandidate ? "IntegerCandidate" : "RootFractional";
}

double BendersCut::lhs(const std::vector<double>& y, const std::vector<double>& v) const {
  double s = phi;
  for (std::size_t i = 0; i < ry.size(); ++i) s += ry[i] * (y[i] - y_anchor[i]) + rv[i] * (v[i] - v_anchor[i]);
  return s;
}

LinearRow BendersCut::to_row(const ModelLayout& master) const {
  LinearRow row;
  row.name = "benders";
  row.sense = lp::RowSense::GreaterEqual;
  row.rhs = target - phi;
  for (std::size_t i = 0; i < ry.size(); ++i) {
    if (ry[i] != 0.0) {
      row.index.push_back(master.y[i]);
      row.value.push_back(ry[i]);
      row.rhs += ry[i] * y_anchor[i];
    }
  }
  for (std::size_t i = 0; i < rv.size(); ++i) {
    if (rv[i] != 0.0) {
      row.index.push_back(master.v[i]);
      row.value.push_back(rv[i]);
      row.rhs += rv[i] * v_anchor[i];
    }
  }
  return row;
}

std::pair<std::vector<double>, std::vector<double>> perturb(const std::vector<double>& y,
                                                            const std::vector<double>& v,
                                                            double epsilon, double tol_beta) {
  auto lift = [&](std::vector<double> z) {
    for (double& e : z)
      if (e <= tol_beta) e = epsilon;
    return z;
  };
  return {lift(y), lift(v)};
}

Subproblem::Subproblem(const Instance& instance, const RobustConfig& config) {
  auto built = build_subproblem(instance, config);
  model_ = std::move(built.first);
  handles_ = std::move(built.second);
  problem_ = model_.to_lp();
  for (int i = 0; i < instance.num_facilities(); ++i) caps_.push_back(instance.load_cap(i));
}

double Subproblem::solve_fixed(const std::vector<double>& y, const std::vector<double>& v) {
  handles_.fix(problem_, y, v);
  const auto s = lp::solve(problem_, basis_.empty() ? nullptr : &basis_);
  if (s.status != lp::Status::Optimal)
    throw std::logic_error("subproblem LP ended with status " + lp::to_string(s.status));
  basis_ = s.basis;
  last_x_ = s.x;
  last_rc_ = s.reduced_costs;
  return s.objective;
}

Evaluation Subproblem::evaluate(const std::vector<double>& y_bar, const std::vector<double>& v_bar,
                                bool use_epsilon, const mip::SolverParams& params, bool direct) {
  const int n = num_facilities();
  Evaluation e;
  std::vector<double> yf = y_bar, vf = v_bar;
  if (use_epsilon) std::tie(yf, vf) = perturb(y_bar, v_bar, params.epsilon, params.tol_beta);
  e.perturbed = use_epsilon && (yf != y_bar || vf != v_bar);
  e.phi_perturbed = solve_fixed(yf, vf);
  e.ry.resize(n);
  e.rv.resize(n);
  e.phi = e.phi_perturbed;
  for (int i = 0; i < n; ++i) {
    e.ry[i] = clean_rc(last_rc_[handles_.y[i]]);
    e.rv[i] = clean_rc(last_rc_[handles_.v[i]]);
    e.phi -= e.ry[i] * (yf[i] - y_bar[i]) + e.rv[i] * (vf[i] - v_bar[i]);
  }
  if (direct) {
    const auto keep_x = last_x_;
    const auto keep_rc = last_rc_;
    e.phi_direct = e.perturbed ? solve_fixed(y_bar, v_bar) : e.phi_perturbed;
    last_x_ = keep_x;
    last_rc_ = keep_rc;
  }
  return e;
}

std::optional<BendersCut> make_cut(const Evaluation& eval, const std::vector<double>& y_bar,
                                   const std::vector<double>& v_bar, double target,
                                   std::string* diagnostic) {
  BendersCut c;
  c.phi = eval.phi;
  c.ry = eval.ry;
  c.rv = eval.rv;
  c.y_anchor = y_bar;
  c.v_anchor = v_bar;
  c.target = target;
  c.perturbed = eval.perturbed;
  if (!(c.lhs(y_bar, v_bar) < target)) {
    if (diagnostic)
      *diagnostic = fmt::format("anchor satisfies its own cut (phi={:.12g}, D={:.12g}); epsilon too large?",
                                eval.phi, target);
    return std::nullopt;
  }
  return c;
}

bool violated(double phi, double target, bool is_integral, const mip::SolverParams& params) {
  if (!(target > 0.0)) throw std::invalid_argument("target demand must be positive");
  const double tol = is_integral ? params.tol_alpha_int : params.tol_alpha_frac;
  return phi / target < 1.0 - tol;
}

std::string cuts_to_json(const std::vector<BendersCut>& cuts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cuts) {
    arr.push_back({{"phi", c.phi},
                   {"ry", c.ry},
                   {"rv", c.rv},
                   {"y_anchor", c.y_anchor},
                   {"v_anchor", c.v_anchor},
                   {"target", c.target},
                   {"perturbed", c.perturbed},
                   {"origin", to_string(c.origin)}});
  }
  return arr.dump(2);
}

mip::SolveReport solve_single_tree(const Instance& instance, const RobustConfig& config,
                                   const mip::SolverParams& params, bool use_epsilon, Audit* audit) {
  const auto master = build_master(instance, config);
  Subproblem sub(instance, config);
  const double target = instance.target_demand();
  CutPool pool;

  auto hook = [&](const std::vector<double>& point, CutOrigin origin) -> std::vector<LinearRow> {
    auto anchor = read_anchor(master.layout, point, instance, params.int_tol);
    if (origin == CutOrigin::IntegerCandidate) anchor.integral = true;
    auto cut = separate(sub, anchor, target, use_epsilon, params, origin, audit);
    if (!cut) return {};
    auto row = cut->to_row(master.layout);
    const bool fresh = pool.insert(row);
    if (audit && fresh) audit->cuts.push_back(*cut);
    // a repeated cut still has to reject an integer candidate
    if (!fresh && origin == CutOrigin::RootFractional) return {};
    return {row};
  };

  mip::CallbackHooks hooks;
  hooks.on_integer_candidate = [&](const std::vector<double>& p) { return hook(p, CutOrigin::IntegerCandidate); };
  hooks.on_root_fractional = [&](const std::vector<double>& p) { return hook(p, CutOrigin::RootFractional); };
  return mip::solve_mip(master, params, &hooks);
}

mip::SolveReport solve_multi_tree(const Instance& instance, const RobustConfig& config,
                                  const mip::SolverParams& params, bool use_epsilon, Audit* audit) {
  const auto start = std::chrono::steady_clock::now();
  auto master = build_master(instance, config);
  Subproblem sub(instance, config);
  const double target = instance.target_demand();
  CutPool pool;

  mip::SolveReport out;
  double node_sum = 0.0;
  int solves = 0;
  for (int iter = 1;; ++iter) {
    mip::SolverParams p = params;
    p.time_limit = params.time_limit - seconds_since(start);
    if (p.time_limit <= 0.0) {
      out.status = mip::SolveStatus::TimeLimit;
      break;
    }
    const auto r = mip::solve_mip(master, p);
    node_sum += r.nodes;
    ++solves;
    out.lp_iterations += r.lp_iterations;
    out.oa_cuts += r.oa_cuts;
    if (std::isfinite(r.bound)) out.bound = std::max(out.bound, r.bound);
    if (r.status != mip::SolveStatus::Optimal) {
      out.status = r.status;
      break;
    }
    const auto anchor = read_anchor(master.layout, r.incumbent, instance, params.int_tol);
    const auto cut = separate(sub, anchor, target, use_epsilon, params, CutOrigin::IntegerCandidate, audit);
    log_at(LogLevel::Info, "iter={} master_obj={:.10g} phi={:.10g} cut={} t={:.2f}", iter, r.objective,
           cut ? cut->phi : target, cut ? "yes" : "no", seconds_since(start));
    if (!cut) {
      out.status = mip::SolveStatus::Optimal;
      out.objective = r.objective;
      out.bound = r.objective;
      out.incumbent = r.incumbent;
      break;
    }
    const auto row = cut->to_row(master.layout);
    if (!pool.insert(row)) throw std::runtime_error("multi-tree produced a repeated cut");
    if (audit) audit->cuts.push_back(*cut);
    master.add_row(row);
    ++out.bcuts;
  }
  out.nodes = solves > 0 ? node_sum / solves : 0.0;
  out.time = seconds_since(start);
  if (std::isfinite(out.objective) && std::isfinite(out.bound))
    out.gap = std::max(0.0, out.objective - out.bound) / std::max(1.0, std::abs(out.objective));
  return out;
}

}  // namespace cpsclp::benders
