#include "cpsclp/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "cpsclp/log.hpp"
#include "json.hpp"

namespace cpsclp::mip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLooseOa = 1e-4;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double relative_gap(double obj, double bound) {
  if (!std::isfinite(obj) || !std::isfinite(bound)) return kInf;
  return std::max(0.0, obj - bound) / std::max(std::abs(obj), 1.0);
}

bool cut_violated(const LinearRow& cut, const std::vector<double>& x) {
  double act = 0.0;
  for (std::size_t k = 0; k < cut.index.size(); ++k) act += cut.value[k] * x[cut.index[k]];
  const double tol = 1e-9 * std::max(1.0, std::abs(cut.rhs));
  switch (cut.sense) {
    case lp::RowSense::LessEqual: return act > cut.rhs + tol;
    case lp::RowSense::GreaterEqual: return act < cut.rhs - tol;
    case lp::RowSense::Equal: return std::abs(act - cut.rhs) > tol;
  }
  return false;
}

struct QuadTerm {
  int v;
  int t;
  double q;
};

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<BoundChange> changes;
  lp::Basis basis;
  std::vector<int> cuts;  // pool rows present when `basis` was taken, in row order
  int branch_var = -1;
  bool up = false;
  double frac = 0.0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

enum class Outcome { Pruned, Infeasible, Integral, Branch, TimeLimit };

struct NodeResult {
  Outcome outcome = Outcome::Infeasible;
  double obj = kInf;
  std::vector<double> x;
  lp::Basis basis;
  std::vector<int> cuts;
};

class BranchAndCut {
 public:
  BranchAndCut(const ModelIR& model, const SolverParams& params, const CallbackHooks* hooks)
      : model_(model), params_(params), hooks_(hooks) {
    model.check();
    params.check();
    sign_ = model.sense == lp::ObjSense::Maximize ? -1.0 : 1.0;
    n_ = model.num_vars();
    lp_ = model.to_lp();
    lp_.set_sense(lp::ObjSense::Minimize);
    for (int k = 0; k < n_; ++k) {
      lp_.set_cost(k, sign_ * model.vars[k].obj);
      if (model.vars[k].kind == VarKind::Binary) binaries_.push_back(k);
    }
    for (int k = 0; k < n_; ++k) {
      const double q = sign_ * model.vars[k].qobj;
      if (q == 0.0) continue;
      if (q < 0.0) throw std::invalid_argument("non-convex quadratic term on " + model.vars[k].name);
      const double ub = model.vars[k].upper;
      const double lb = model.vars[k].lower;
      const double tmax = std::isfinite(ub) && std::isfinite(lb) ? q * std::max(ub * ub, lb * lb) : lp::kInf;
      const int t = lp_.add_variable(0.0, tmax, 1.0);
      quad_.push_back({k, t, q});
      if (std::isfinite(ub) && ub > 0) {
        lp_.add_row(tangent(quad_.back(), 0.5 * ub));
        lp_.add_row(tangent(quad_.back(), ub));
      }
    }
    for (const auto& c : model.cones) cones_.push_back(c);
    base_rows_ = lp_.num_rows();
    base_lo_ = lp_.lowers();
    base_hi_ = lp_.uppers();
    pc_sum_[0].assign(n_, 0.0);
    pc_sum_[1].assign(n_, 0.0);
    pc_cnt_[0].assign(n_, 0);
    pc_cnt_[1].assign(n_, 0);
  }

  SolveReport run();
  RelaxationResult relax(double tol, int max_rounds);

 private:
  static lp::SparseRow tangent(const QuadTerm& qt, double at) {
    return {{qt.v, qt.t}, {2.0 * qt.q * at, -1.0}, lp::RowSense::LessEqual, qt.q * at * at};
  }

  // Outer-approximation rows live only in the subtree that produced them
  // (children inherit the binding ones); hook cuts stay in every node.
  void add_cut(lp::SparseRow row, bool global) {
    const int id = static_cast<int>(pool_.size());
    lp_.add_row(row);
    pool_.push_back(std::move(row));
    active_.push_back(id);
    if (global) global_ids_.push_back(id);
  }

  void load_cuts(const std::vector<int>& ids) {
    if (active_ != ids) {
      lp_.truncate_rows(base_rows_);
      active_.clear();
      for (int id : ids) {
        lp_.add_row(pool_[id]);
        active_.push_back(id);
      }
    }
    if (global_ids_.empty()) return;
    std::vector<char> present(pool_.size(), 0);
    for (int id : active_) present[id] = 1;
    for (int id : global_ids_) {
      if (present[id]) continue;
      lp_.add_row(pool_[id]);
      active_.push_back(id);
    }
  }

  // Drops pool rows whose slack is basic; the basis stays valid for the rest.
  void inherit_cuts(NodeResult& res) const {
    std::vector<char> global(pool_.size(), 0);
    for (int id : global_ids_) global[id] = 1;
    lp::Basis kept;
    kept.columns = res.basis.columns;
    kept.rows.assign(res.basis.rows.begin(), res.basis.rows.begin() + base_rows_);
    for (std::size_t k = 0; k < active_.size(); ++k) {
      const auto st = res.basis.rows[base_rows_ + k];
      if (!global[active_[k]] && st == lp::VarStatus::Basic) continue;
      res.cuts.push_back(active_[k]);
      kept.rows.push_back(st);
    }
    res.basis = std::move(kept);
  }

  bool apply_bounds(const std::vector<BoundChange>& changes) {
    for (int k : binaries_) lp_.set_bounds(k, base_lo_[k], base_hi_[k]);
    for (const auto& c : cones_) {
      lp_.set_bounds(c.v, base_lo_[c.v], base_hi_[c.v]);
      lp_.set_bounds(c.u, base_lo_[c.u], base_hi_[c.u]);
    }
    for (const auto& ch : changes) {
      const double lo = std::max(ch.lower, base_lo_[ch.var]);
      const double hi = std::min(ch.upper, base_hi_[ch.var]);
      if (lo > hi) return false;
      lp_.set_bounds(ch.var, lo, hi);
    }
    // zero opening forces zero load
    for (const auto& c : cones_) {
      if (lp_.upper(c.y) > 0.0) continue;
      if (lp_.lower(c.v) > 0.0 || lp_.lower(c.u) > 0.0) return false;
      lp_.set_bounds(c.v, lp_.lower(c.v), 0.0);
      lp_.set_bounds(c.u, lp_.lower(c.u), 0.0);
    }
    return true;
  }

  double epigraph_error(const std::vector<double>& x) const {
    double err = 0.0;
    for (const auto& qt : quad_) err += std::max(0.0, qt.q * x[qt.v] * x[qt.v] - x[qt.t]);
    return err;
  }

  int separate_oa(const std::vector<double>& x, double tol, bool skip_quad = false) {
    int added = 0;
    for (const auto& qt : quad_) {
      if (skip_quad) break;
      const double v = x[qt.v];
      const double want = qt.q * v * v;
      if (want - x[qt.t] > tol * std::max(1.0, want)) {
        add_cut(tangent(qt, v), false);
        ++added;
      }
    }
    for (const auto& c : cones_) {
      auto cut = separate_cone_cut(x[c.v], std::max(0.0, x[c.u]), std::max(0.0, x[c.y]), tol);
      if (!cut) continue;
      add_cut({{c.v, c.u, c.y}, {cut->cv, cut->cu, cut->cy}, lp::RowSense::LessEqual, cut->rhs}, false);
      ++added;
    }
    oa_cuts_ += added;
    return added;
  }

  bool integral(const std::vector<double>& x) const {
    for (int k : binaries_)
      if (std::abs(x[k] - std::round(x[k])) > params_.int_tol) return false;
    return true;
  }

  std::vector<double> model_point(const std::vector<double>& x, bool snap) const {
    std::vector<double> pt(x.begin(), x.begin() + n_);
    for (int k : binaries_) pt[k] = snap ? std::round(pt[k]) : std::clamp(pt[k], 0.0, 1.0);
    if (snap) {
      for (const auto& c : cones_) {
        const double y = pt[c.y];
        if (y > 0.0) pt[c.u] = std::max(pt[c.u], pt[c.v] * pt[c.v] / y);
      }
    }
    return pt;
  }

  double cutoff() const {
    if (!std::isfinite(inc_obj_)) return kInf;
    const double scale = std::max(1.0, std::abs(inc_obj_));
    return inc_obj_ - std::max(1e-9 * scale, params_.mip_gap * scale);
  }

  void add_cuts(const std::vector<LinearRow>& cuts) {
    for (const auto& c : cuts) add_cut({c.index, c.value, c.sense, c.rhs}, true);
  }

  NodeResult process(const Node& node, bool heuristic);
  void try_rounding(const std::vector<double>& x);
  int choose_branch(const std::vector<double>& x) const;
  void update_pseudocost(const Node& node, double parent_obj, double obj);
  void log_progress(double bound, bool force);

  const ModelIR& model_;
  SolverParams params_;
  const CallbackHooks* hooks_;
  double sign_ = 1.0;
  int n_ = 0;
  lp::LpProblem lp_;
  std::vector<int> binaries_;
  std::vector<QuadTerm> quad_;
  std::vector<RotatedCone> cones_;
  std::vector<double> base_lo_, base_hi_;
  int base_rows_ = 0;
  std::vector<lp::SparseRow> pool_;
  std::vector<int> global_ids_;
  std::vector<int> active_;

  std::vector<double> incumbent_;
  double inc_obj_ = kInf;
  long nodes_ = 0;
  long bcuts_ = 0;
  long frbcuts_ = 0;
  long oa_cuts_ = 0;
  long lp_iterations_ = 0;
  int frac_rounds_ = 0;
  std::vector<double> pc_sum_[2];
  std::vector<int> pc_cnt_[2];
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  double last_log_ = -1.0;
  double best_bound_ = -kInf;
};

NodeResult BranchAndCut::process(const Node& node, bool heuristic) {
  NodeResult res;
  if (!apply_bounds(node.changes)) return res;
  load_cuts(node.cuts);
  lp::Basis basis = node.basis;
  const bool root = node.depth == 0 && !heuristic;
  int oa_rounds = 0;
  int hook_rounds = 0;
  while (true) {
    const auto s = lp::solve(lp_, basis.empty() ? nullptr : &basis);
    lp_iterations_ += s.iterations;
    if (s.status == lp::Status::Infeasible) return res;
    if (s.status != lp::Status::Optimal)
      throw std::runtime_error("node relaxation ended with status " + lp::to_string(s.status));
    basis = s.basis;
    res.obj = s.objective;
    res.basis = basis;
    if (!heuristic && s.objective >= cutoff()) {
      res.outcome = Outcome::Pruned;
      return res;
    }
    if (seconds_since(start_) > params_.time_limit) {
      res.outcome = Outcome::TimeLimit;
      return res;
    }
    const bool integ = integral(s.x);
    // fractional points only need a bound good enough to branch on
    const bool loose = !integ && epigraph_error(s.x) <= kLooseOa * std::max(1.0, std::abs(s.objective));
    if (oa_rounds < params_.max_oa_rounds && separate_oa(s.x, params_.cone_tol, loose) > 0) {
      ++oa_rounds;
      continue;
    }
    if (!integ && root && hooks_ && hooks_->on_root_fractional &&
        frac_rounds_ < params_.root_fractional_rounds) {
      const auto cuts = hooks_->on_root_fractional(model_point(s.x, false));
      if (!cuts.empty()) {
        ++frac_rounds_;
        add_cuts(cuts);
        frbcuts_ += static_cast<long>(cuts.size());
        continue;
      }
      frac_rounds_ = params_.root_fractional_rounds;
    }
    if (!integ) {
      res.outcome = Outcome::Branch;
      res.x = s.x;
      inherit_cuts(res);
      return res;
    }
    const auto pt = model_point(s.x, true);
    if (hooks_ && hooks_->on_integer_candidate) {
      const auto cuts = hooks_->on_integer_candidate(pt);
      if (!cuts.empty()) {
        if (std::none_of(cuts.begin(), cuts.end(), [&](const LinearRow& c) { return cut_violated(c, pt); }))
          throw std::logic_error("integer-candidate hook returned cuts the candidate satisfies");
        if (++hook_rounds > 1000) throw std::runtime_error("lazy cut loop did not settle");
        add_cuts(cuts);
        bcuts_ += static_cast<long>(cuts.size());
        continue;
      }
    }
    const double true_obj = sign_ * model_.objective(pt);
    if (true_obj < inc_obj_) {
      inc_obj_ = true_obj;
      incumbent_ = pt;
      log_at(LogLevel::Trace, "incumbent obj={:.10g} node={}", sign_ * inc_obj_, nodes_);
    }
    res.outcome = Outcome::Integral;
    res.x = s.x;
    return res;
  }
}

void BranchAndCut::try_rounding(const std::vector<double>& x) {
  Node h;
  h.depth = 1;
  for (int k : binaries_) {
    const double r = x[k] > params_.int_tol ? 1.0 : 0.0;
    h.changes.push_back({k, r, r});
  }
  process(h, true);
}

int BranchAndCut::choose_branch(const std::vector<double>& x) const {
  int best = -1;
  if (params_.branch_rule == BranchRule::PseudoCost) {
    double avg[2] = {1.0, 1.0};
    for (int d = 0; d < 2; ++d) {
      double s = 0.0;
      int c = 0;
      for (int k : binaries_)
        if (pc_cnt_[d][k] > 0) {
          s += pc_sum_[d][k] / pc_cnt_[d][k];
          ++c;
        }
      if (c > 0) avg[d] = s / c;
    }
    double best_score = -1.0;
    for (int k : binaries_) {
      const double f = x[k] - std::floor(x[k]);
      if (std::min(f, 1.0 - f) <= params_.int_tol) continue;
      const double down = pc_cnt_[0][k] > 0 ? pc_sum_[0][k] / pc_cnt_[0][k] : avg[0];
      const double up = pc_cnt_[1][k] > 0 ? pc_sum_[1][k] / pc_cnt_[1][k] : avg[1];
      const double score = std::max(f * down, 1e-6) * std::max((1.0 - f) * up, 1e-6);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    return best;
  }
  double best_dist = kInf;
  for (int k : binaries_) {
    const double f = x[k] - std::floor(x[k]);
    if (std::min(f, 1.0 - f) <= params_.int_tol) continue;
    const double dist = std::abs(f - 0.5);
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return best;
}

void BranchAndCut::update_pseudocost(const Node& node, double parent_obj, double obj) {
  if (node.branch_var < 0 || !std::isfinite(obj) || !std::isfinite(parent_obj)) return;
  const double dist = node.up ? 1.0 - node.frac : node.frac;
  if (dist <= 0.0) return;
  const int d = node.up ? 1 : 0;
  pc_sum_[d][node.branch_var] += std::max(0.0, obj - parent_obj) / dist;
  ++pc_cnt_[d][node.branch_var];
}

void BranchAndCut::log_progress(double bound, bool force) {
  if (log_level() < LogLevel::Info) return;
  const double t = seconds_since(start_);
  if (!force && t - last_log_ < params_.log_interval) return;
  last_log_ = t;
  log_at(LogLevel::Info, "node={} obj={:.10g} bound={:.10g} gap={:.3g} cuts={}/{} t={:.2f}", nodes_,
         sign_ * inc_obj_, sign_ * bound, relative_gap(inc_obj_, bound), bcuts_, frbcuts_, t);
}

SolveReport BranchAndCut::run() {
  std::priority_queue<Node, std::vector<Node>, NodeOrder> best_first;
  std::vector<Node> stack;
  const bool dfs = params_.node_selection == NodeSelection::DepthFirst;
  long next_id = 0;
  auto push = [&](Node&& node) {
    if (dfs) stack.push_back(std::move(node));
    else best_first.push(std::move(node));
  };
  auto open_empty = [&] { return dfs ? stack.empty() : best_first.empty(); };
  auto open_min = [&] {
    double m = kInf;
    if (dfs) {
      for (const auto& nd : stack) m = std::min(m, nd.bound);
    } else if (!best_first.empty()) {
      m = best_first.top().bound;
    }
    return m;
  };

  Node root;
  root.id = next_id++;
  push(std::move(root));
  bool timed_out = false;
  double pending_bound = kInf;

  while (!open_empty()) {
    if (seconds_since(start_) > params_.time_limit) {
      timed_out = true;
      break;
    }
    Node node;
    if (dfs) {
      node = std::move(stack.back());
      stack.pop_back();
    } else {
      node = best_first.top();
      best_first.pop();
    }
    if (node.bound >= cutoff()) continue;
    ++nodes_;
    const double parent_obj = node.bound;
    auto r = process(node, false);
    if (r.outcome == Outcome::TimeLimit) {
      timed_out = true;
      pending_bound = std::max(node.bound, r.obj);
      break;
    }
    if (r.outcome != Outcome::Infeasible) update_pseudocost(node, parent_obj, r.obj);
    if (r.outcome == Outcome::Branch) {
      if (node.depth == 0 && !std::isfinite(inc_obj_)) {
        try_rounding(r.x);
        if (r.obj >= cutoff()) continue;
      }
      const int k = choose_branch(r.x);
      if (k < 0) throw std::logic_error("branching requested on an integral point");
      const double f = r.x[k] - std::floor(r.x[k]);
      Node down, up;
      for (Node* child : {&down, &up}) {
        child->depth = node.depth + 1;
        child->bound = r.obj;
        child->changes = node.changes;
        child->basis = r.basis;
        child->cuts = r.cuts;
        child->branch_var = k;
        child->frac = f;
      }
      down.changes.push_back({k, 0.0, 0.0});
      up.changes.push_back({k, 1.0, 1.0});
      up.up = true;
      // depth-first dives toward the nearer integer
      const bool up_first = f >= 0.5;
      Node& first = up_first ? up : down;
      Node& second = up_first ? down : up;
      second.id = next_id++;
      first.id = next_id++;
      if (dfs) {
        push(std::move(second));
        push(std::move(first));
      } else {
        push(std::move(first));
        push(std::move(second));
      }
    }
    const double bound_now = std::min(open_min(), inc_obj_);
    if (std::isfinite(bound_now)) best_bound_ = std::max(best_bound_, bound_now);
    log_progress(std::min(open_min(), inc_obj_), false);
  }

  SolveReport rep;
  rep.nodes = nodes_;
  rep.bcuts = bcuts_;
  rep.frbcuts = frbcuts_;
  rep.oa_cuts = oa_cuts_;
  rep.lp_iterations = lp_iterations_;
  rep.time = seconds_since(start_);
  double bound = std::min({open_min(), pending_bound, inc_obj_});
  if (timed_out) {
    rep.status = SolveStatus::TimeLimit;
  } else {
    rep.status = std::isfinite(inc_obj_) ? SolveStatus::Optimal : SolveStatus::Infeasible;
    bound = inc_obj_;
  }
  if (std::isfinite(inc_obj_)) {
    rep.objective = sign_ * inc_obj_;
    rep.incumbent = incumbent_;
  }
  if (std::isfinite(bound)) rep.bound = sign_ * bound;
  rep.gap = relative_gap(inc_obj_, bound);
  log_progress(bound, true);
  return rep;
}

RelaxationResult BranchAndCut::relax(double tol, int max_rounds) {
  RelaxationResult out;
  apply_bounds({});
  lp::Basis basis;
  double last = -kInf;
  int stalled = 0;
  std::vector<double> x;
  while (out.rounds < max_rounds) {
    const auto s = lp::solve(lp_, basis.empty() ? nullptr : &basis);
    if (s.status == lp::Status::Infeasible) return out;
    if (s.status != lp::Status::Optimal)
      throw std::runtime_error("relaxation ended with status " + lp::to_string(s.status));
    basis = s.basis;
    out.feasible = true;
    out.lower = s.objective;
    x = s.x;
    stalled = s.objective > last + 1e-14 * std::max(1.0, std::abs(s.objective)) ? 0 : stalled + 1;
    last = std::max(last, s.objective);
    if (stalled > 20) break;
    if (separate_oa(s.x, tol) == 0) break;
    ++out.rounds;
  }
  out.lower = last;
  std::vector<double> pt(x.begin(), x.begin() + n_);
  bool repaired = true;
  for (const auto& c : cones_) {
    const double y = pt[c.y];
    const double v = pt[c.v];
    if (y > 0.0) {
      pt[c.u] = std::max(pt[c.u], v * v / y);
    } else if (std::abs(v) > 0.0) {
      repaired = false;
    }
  }
  const double upper_min = repaired ? sign_ * model_.objective(pt) : kInf;
  if (sign_ > 0) {
    out.upper = upper_min;
  } else {
    out.lower = -upper_min;
    out.upper = -last;
  }
  out.x = pt;
  return out;
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

void SolverParams::check() const {
  for (double t : {int_tol, cone_tol, tol_alpha_int, tol_alpha_frac, tol_beta, epsilon})
    if (!(t > 0.0)) throw std::invalid_argument("solver tolerances must be positive");
  if (!(mip_gap >= 0.0)) throw std::invalid_argument("mip_gap must be non-negative");
  if (!(time_limit > 0.0)) throw std::invalid_argument("time_limit must be positive");
}

std::string to_json(const SolveReport& r) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["objective"] = num(r.objective);
  j["bound"] = num(r.bound);
  j["gap"] = num(r.gap);
  j["incumbent"] = r.incumbent;
  j["nodes"] = r.nodes;
  j["bcuts"] = r.bcuts;
  j["frbcuts"] = r.frbcuts;
  j["oa_cuts"] = r.oa_cuts;
  j["lp_iterations"] = r.lp_iterations;
  j["time"] = r.time;
  return j.dump(2);
}

SolveReport solve_mip(const ModelIR& model, const SolverParams& params, const CallbackHooks* hooks) {
  BranchAndCut bc(model, params, hooks);
  return bc.run();
}

RelaxationResult solve_relaxation(const ModelIR& model, double cone_tol, int max_rounds) {
  SolverParams p;
  p.cone_tol = cone_tol;
  BranchAndCut bc(model, p, nullptr);
  return bc.relax(cone_tol, max_rounds);
}

std::optional<ConeCut> separate_cone_cut(double v, double u, double y, double cone_tol) {
  const double viol = v * v - u * y;
  if (viol <= cone_tol * std::max(1.0, v * v)) return std::nullopt;
  const double n = std::sqrt(4.0 * v * v + (u - y) * (u - y));
  if (n == 0.0) return std::nullopt;
  ConeCut c;
  c.cv = 4.0 * v / n;
  c.cu = (u - y) / n - 1.0;
  c.cy = -(u - y) / n - 1.0;
  c.rhs = 0.0;
  return c;
}

Branching branch(const std::vector<BoundChange>& node, const std::vector<double>& point,
                 const std::vector<int>& binaries, double int_tol) {
  int best = -1;
  double best_dist = kInf;
  for (int k : binaries) {
    const double f = point[k] - std::floor(point[k]);
    if (std::min(f, 1.0 - f) <= int_tol) continue;
    const double dist = std::abs(f - 0.5);
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  if (best < 0) throw std::logic_error("branch called on an integral point");
  Branching b;
  b.var = best;
  b.down = node;
  b.up = node;
  b.down.push_back({best, 0.0, 0.0});
  b.up.push_back({best, 1.0, 1.0});
  return b;
}

}  // namespace cpsclp::mip
