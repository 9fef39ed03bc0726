#include "cpsclp/model.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace cpsclp {

using lp::RowSense;

std::string to_string(FormulationKind kind) {
  switch (kind) {
    case FormulationKind::DeterministicMiqp: return "DeterministicMiqp";
    case FormulationKind::ExtendedRobustMiqp: return "ExtendedRobustMiqp";
    case FormulationKind::PerspectiveMisocp: return "PerspectiveMisocp";
    case FormulationKind::BendersMaster: return "BendersMaster";
    case FormulationKind::BendersSubproblem: return "BendersSubproblem";
  }
  return "?";
}

int ModelIR::add_var(VarDecl decl) {
  const int id = num_vars();
  if (!var_index_.emplace(decl.name, id).second)
    throw std::logic_error("duplicate variable name " + decl.name);
  vars.push_back(std::move(decl));
  return id;
}

int ModelIR::add_row(LinearRow row) {
  rows.push_back(std::move(row));
  return num_rows() - 1;
}

int ModelIR::var(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) throw std::out_of_range("no variable " + name);
  return it->second;
}

lp::LpProblem ModelIR::to_lp() const {
  lp::LpProblem p;
  for (const auto& v : vars) p.add_variable(v.lower, v.upper, v.obj);
  for (const auto& r : rows) p.add_row(r.index, r.value, r.sense, r.rhs);
  p.set_sense(sense);
  return p;
}

double ModelIR::objective(const std::vector<double>& x) const {
  double s = 0.0;
  for (int k = 0; k < num_vars(); ++k) s += vars[k].obj * x[k] + vars[k].qobj * x[k] * x[k];
  return s;
}

void ModelIR::check() const {
  const int n = num_vars();
  for (const auto& v : vars)
    if (!(v.lower <= v.upper)) throw std::logic_error("bad bounds on " + v.name);
  for (const auto& r : rows) {
    if (r.index.size() != r.value.size()) throw std::logic_error("ragged row " + r.name);
    for (int k : r.index)
      if (k < 0 || k >= n) throw std::logic_error("row " + r.name + " references a missing variable");
  }
  for (const auto& c : cones) {
    for (int k : {c.v, c.u, c.y})
      if (k < 0 || k >= n) throw std::logic_error("cone references a missing variable");
    if (vars[c.v].qobj != 0.0) throw std::logic_error("quadratic term on coned " + vars[c.v].name);
  }
}

std::string to_lp_text(const ModelIR& model) {
  std::vector<std::string> names;
  for (const auto& v : model.vars) names.push_back(v.name);
  std::string head;
  for (const auto& v : model.vars)
    if (v.qobj != 0.0) head += fmt::format("\\ quad: {:+.17g} {} ^2\n", v.qobj, v.name);
  for (std::size_t k = 0; k < model.cones.size(); ++k) {
    const auto& c = model.cones[k];
    head += fmt::format("\\ cone{}: {} ^2 <= {} * {}\n", k, names[c.v], names[c.u], names[c.y]);
  }
  std::string body = lp::to_lp_text(model.to_lp(), names);
  std::string bins;
  for (const auto& v : model.vars)
    if (v.kind == VarKind::Binary) bins += " " + v.name;
  if (!bins.empty()) {
    const auto end = body.rfind("End");
    body.insert(end, "Binaries\n" + bins + "\n");
  }
  return head + body;
}

namespace {

struct Builder {
  const Instance& inst;
  ModelIR& m;

  int add(std::string name, VarKind kind, double lo, double hi, double obj, double qobj = 0.0) {
    return m.add_var({std::move(name), kind, lo, hi, obj, qobj});
  }

  void pairs_and_x() {
    for (int j = 0; j < inst.num_customers(); ++j)
      for (int i : inst.covering(j)) {
        m.layout.pairs.emplace_back(i, j);
        m.layout.x.push_back(add(fmt::format("x{}_{}", i, j), VarKind::Continuous, 0, 1, 0));
      }
  }

  // facility-major pair positions
  std::vector<std::vector<int>> pairs_of_facility() const {
    std::vector<std::vector<int>> out(inst.num_facilities());
    for (std::size_t p = 0; p < m.layout.pairs.size(); ++p) out[m.layout.pairs[p].first].push_back(static_cast<int>(p));
    return out;
  }

  std::vector<std::vector<int>> pairs_of_customer() const {
    std::vector<std::vector<int>> out(inst.num_customers());
    for (std::size_t p = 0; p < m.layout.pairs.size(); ++p) out[m.layout.pairs[p].second].push_back(static_cast<int>(p));
    return out;
  }

  void protection_vars(const RobustConfig& cfg) {
    if (cfg.protects_load()) {
      for (int i = 0; i < inst.num_facilities(); ++i)
        m.layout.rho.push_back(add(fmt::format("rho{}", i), VarKind::Continuous, 0, lp::kInf, 0));
      for (auto [i, j] : m.layout.pairs)
        m.layout.sigma.push_back(add(fmt::format("sigma{}_{}", i, j), VarKind::Continuous, 0, lp::kInf, 0));
    }
    if (cfg.protects_coverage()) {
      m.layout.tau = add("tau", VarKind::Continuous, 0, lp::kInf, 0);
      m.layout.pi.assign(inst.num_customers(), -1);
      for (int j = 0; j < inst.num_customers(); ++j)
        if (!inst.covering(j).empty())
          m.layout.pi[j] = add(fmt::format("pi{}", j), VarKind::Continuous, 0, lp::kInf, 0);
    }
  }

  // Rows shared by the direct models (min form) and the subproblem (max form).
  // `sub` flips the load row to  sum d x + protection - v <= 0.
  void rows(const RobustConfig& cfg, bool sub) {
    const auto& L = m.layout;
    const auto& cust = inst.customers();
    const double gamma = cfg.gamma;
    const auto by_fac = pairs_of_facility();
    const auto by_cust = pairs_of_customer();
    const double sgn = sub ? 1.0 : -1.0;

    for (int i = 0; i < inst.num_facilities(); ++i) {
      LinearRow r;
      r.name = fmt::format("load{}", i);
      r.index.push_back(L.v[i]);
      r.value.push_back(-sgn);
      for (int p : by_fac[i]) {
        r.index.push_back(L.x[p]);
        r.value.push_back(sgn * cust[L.pairs[p].second].demand);
      }
      if (cfg.protects_load()) {
        r.index.push_back(L.rho[i]);
        r.value.push_back(sgn * gamma);
        for (int p : by_fac[i]) {
          r.index.push_back(L.sigma[p]);
          r.value.push_back(sgn);
        }
      }
      r.sense = sub ? RowSense::LessEqual : RowSense::GreaterEqual;
      m.add_row(std::move(r));
    }

    if (!sub) {
      LinearRow r;
      r.name = "coverage";
      for (std::size_t p = 0; p < L.pairs.size(); ++p) {
        r.index.push_back(L.x[p]);
        r.value.push_back(cust[L.pairs[p].second].demand);
      }
      if (cfg.protects_coverage()) {
        r.index.push_back(L.tau);
        r.value.push_back(-gamma);
        for (int j = 0; j < inst.num_customers(); ++j)
          if (L.pi[j] >= 0) {
            r.index.push_back(L.pi[j]);
            r.value.push_back(-1.0);
          }
      }
      r.sense = RowSense::GreaterEqual;
      r.rhs = inst.target_demand();
      m.add_row(std::move(r));
    }

    if (cfg.protects_coverage()) {
      for (int j = 0; j < inst.num_customers(); ++j) {
        if (L.pi[j] < 0) continue;
        LinearRow r;
        r.name = fmt::format("covdual{}", j);
        r.index = {L.tau, L.pi[j]};
        r.value = {1.0, 1.0};
        for (int p : by_cust[j]) {
          r.index.push_back(L.x[p]);
          r.value.push_back(-cust[j].deviation);
        }
        r.sense = RowSense::GreaterEqual;
        m.add_row(std::move(r));
      }
    }

    if (cfg.protects_load()) {
      for (std::size_t p = 0; p < L.pairs.size(); ++p) {
        const auto [i, j] = L.pairs[p];
        LinearRow r;
        r.name = fmt::format("loaddual{}_{}", i, j);
        r.index = {L.rho[i], L.sigma[p], L.x[p]};
        r.value = {1.0, 1.0, -cust[j].deviation};
        r.sense = RowSense::GreaterEqual;
        m.add_row(std::move(r));
      }
    }

    for (int j = 0; j < inst.num_customers(); ++j) {
      if (by_cust[j].empty()) continue;
      LinearRow r;
      r.name = fmt::format("assign{}", j);
      for (int p : by_cust[j]) {
        r.index.push_back(L.x[p]);
        r.value.push_back(1.0);
      }
      r.rhs = 1.0;
      m.add_row(std::move(r));
    }

    for (std::size_t p = 0; p < L.pairs.size(); ++p) {
      const auto [i, j] = L.pairs[p];
      LinearRow r;
      r.name = fmt::format("link{}_{}", i, j);
      r.index = {L.x[p], L.y[i]};
      r.value = {1.0, -1.0};
      m.add_row(std::move(r));
    }
  }
};

ModelIR build_direct(const Instance& inst, RobustConfig cfg, FormulationKind kind, bool perspective) {
  ModelIR m;
  m.kind = kind;
  Builder b{inst, m};
  const auto& fac = inst.facilities();
  for (int i = 0; i < inst.num_facilities(); ++i)
    m.layout.y.push_back(b.add(fmt::format("y{}", i), VarKind::Binary, 0, 1, fac[i].open_cost));
  b.pairs_and_x();
  for (int i = 0; i < inst.num_facilities(); ++i) {
    const double cap = inst.load_cap(i);
    m.layout.v.push_back(b.add(fmt::format("v{}", i), VarKind::Continuous, 0, cap, fac[i].b,
                               perspective ? 0.0 : fac[i].a));
  }
  if (perspective) {
    for (int i = 0; i < inst.num_facilities(); ++i) {
      const double cap = inst.load_cap(i);
      m.layout.u.push_back(b.add(fmt::format("u{}", i), VarKind::Continuous, 0, cap * cap, fac[i].a));
      m.cones.push_back({m.layout.v[i], m.layout.u[i], m.layout.y[i]});
    }
  }
  b.protection_vars(cfg);
  b.rows(cfg, false);
  return m;
}

}  // namespace

ModelIR build_deterministic(const Instance& instance) {
  return build_direct(instance, {0, UncertaintyMode::Deterministic}, FormulationKind::DeterministicMiqp, false);
}

ModelIR build_extended_robust(const Instance& instance, const RobustConfig& config) {
  check_config(instance, config);
  if (config.mode == UncertaintyMode::Deterministic) return build_deterministic(instance);
  return build_direct(instance, config, FormulationKind::ExtendedRobustMiqp, false);
}

ModelIR build_perspective(const Instance& instance, const RobustConfig& config) {
  check_config(instance, config);
  return build_direct(instance, config, FormulationKind::PerspectiveMisocp, true);
}

ModelIR build_master(const Instance& instance, const RobustConfig& config) {
  check_config(instance, config);
  ModelIR m;
  m.kind = FormulationKind::BendersMaster;
  const auto& fac = instance.facilities();
  const int n = instance.num_facilities();
  for (int i = 0; i < n; ++i)
    m.layout.y.push_back(m.add_var({fmt::format("y{}", i), VarKind::Binary, 0, 1, fac[i].open_cost, 0}));
  for (int i = 0; i < n; ++i)
    m.layout.v.push_back(m.add_var({fmt::format("v{}", i), VarKind::Continuous, 0, instance.load_cap(i), fac[i].b, 0}));
  for (int i = 0; i < n; ++i) {
    const double cap = instance.load_cap(i);
    m.layout.u.push_back(m.add_var({fmt::format("u{}", i), VarKind::Continuous, 0, cap * cap, fac[i].a, 0}));
    m.cones.push_back({m.layout.v[i], m.layout.u[i], m.layout.y[i]});
  }
  return m;
}

void FixingHandles::fix(lp::LpProblem& problem, const std::vector<double>& y_bar,
                        const std::vector<double>& v_bar) const {
  for (std::size_t i = 0; i < y.size(); ++i) problem.set_bounds(y[i], y_bar[i], y_bar[i]);
  for (std::size_t i = 0; i < v.size(); ++i) problem.set_bounds(v[i], v_bar[i], v_bar[i]);
}

std::pair<ModelIR, FixingHandles> build_subproblem(const Instance& instance, const RobustConfig& config) {
  check_config(instance, config);
  ModelIR m;
  m.kind = FormulationKind::BendersSubproblem;
  m.sense = lp::ObjSense::Maximize;
  Builder b{instance, m};
  b.pairs_and_x();
  const auto& cust = instance.customers();
  for (std::size_t p = 0; p < m.layout.pairs.size(); ++p)
    m.vars[m.layout.x[p]].obj = cust[m.layout.pairs[p].second].demand;
  b.protection_vars(config);
  if (config.protects_coverage()) {
    m.vars[m.layout.tau].obj = -config.gamma;
    for (int k : m.layout.pi)
      if (k >= 0) m.vars[k].obj = -1.0;
  }
  FixingHandles h;
  for (int i = 0; i < instance.num_facilities(); ++i)
    h.y.push_back(m.add_var({fmt::format("y{}", i), VarKind::Continuous, 0, 1, 0, 0}));
  for (int i = 0; i < instance.num_facilities(); ++i)
    h.v.push_back(m.add_var({fmt::format("v{}", i), VarKind::Continuous, 0, instance.load_cap(i), 0, 0}));
  m.layout.y = h.y;
  m.layout.v = h.v;
  b.rows(config, true);
  return {std::move(m), std::move(h)};
}

}  // namespace cpsclp
