#include "cpsclp/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "cpsclp/model.hpp"
#include "cpsclp/oracle.hpp"
#include "json.hpp"

namespace cpsclp {

namespace {

std::string real(double v) {
  if (std::isnan(v)) return "";
  auto s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

double parse_real(const std::string& s) { return s.empty() ? kNaN : std::stod(s); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json() : nlohmann::json(v); }
double num(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<std::vector<double>> assignment_from(const ModelIR& m, const std::vector<double>& point, int nf,
                                                 int nc) {
  std::vector<std::vector<double>> x(nf, std::vector<double>(nc, 0.0));
  for (std::size_t k = 0; k < m.layout.pairs.size(); ++k) {
    const auto [i, j] = m.layout.pairs[k];
    x[i][j] = std::clamp(point[m.layout.x[k]], 0.0, 1.0);
  }
  return x;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Miqp: return "miqp";
    case Method::Misocp: return "misocp";
    case Method::StBen: return "st-ben";
    case Method::StEpsBen: return "steps-ben";
    case Method::MtBen: return "mt-ben";
    case Method::MtEpsBen: return "mteps-ben";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (auto m : {Method::Miqp, Method::Misocp, Method::StBen, Method::StEpsBen, Method::MtBen, Method::MtEpsBen})
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown method '" + text + "'");
}

bool is_benders(Method method) { return method != Method::Miqp && method != Method::Misocp; }

std::string to_csv_line(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.id, r.seed, real(r.radius), r.gamma,
                     r.mode, r.method, real(r.objval), r.nfac, real(r.opencost), real(r.congcost), real(r.load),
                     real(r.cov), real(r.time_s), real(r.gap_pct), real(r.nodes), r.bcuts, r.frbcuts, r.status);
}

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) out += to_csv_line(r) + "\n";
  return out;
}

std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected metrics CSV header");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 18) throw std::runtime_error(fmt::format("line {}: expected 18 fields, got {}", lineno, c.size()));
    try {
      MetricsRow r;
      r.id = c[0];
      r.seed = std::stoull(c[1]);
      r.radius = parse_real(c[2]);
      r.gamma = std::stoi(c[3]);
      r.mode = c[4];
      r.method = c[5];
      r.objval = parse_real(c[6]);
      r.nfac = std::stoi(c[7]);
      r.opencost = parse_real(c[8]);
      r.congcost = parse_real(c[9]);
      r.load = parse_real(c[10]);
      r.cov = parse_real(c[11]);
      r.time_s = parse_real(c[12]);
      r.gap_pct = parse_real(c[13]);
      r.nodes = parse_real(c[14]);
      r.bcuts = std::stol(c[15]);
      r.frbcuts = std::stol(c[16]);
      r.status = c[17];
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::runtime_error(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  return rows;
}

std::string to_json(const std::vector<MetricsRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"id", r.id},           {"seed", r.seed},         {"R", r.radius},
                   {"gamma", r.gamma},     {"mode", r.mode},         {"method", r.method},
                   {"objval", num(r.objval)}, {"nfac", r.nfac},      {"opencost", num(r.opencost)},
                   {"congcost", num(r.congcost)}, {"load", num(r.load)}, {"cov", num(r.cov)},
                   {"time_s", num(r.time_s)}, {"gap_pct", num(r.gap_pct)}, {"nodes", num(r.nodes)},
                   {"bcuts", r.bcuts},     {"frbcuts", r.frbcuts},   {"status", r.status}});
  }
  return arr.dump(2);
}

std::vector<MetricsRow> rows_from_json(const std::string& text) {
  std::vector<MetricsRow> rows;
  for (const auto& j : nlohmann::json::parse(text)) {
    MetricsRow r;
    r.id = j.at("id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.radius = num(j.at("R"));
    r.gamma = j.at("gamma").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.objval = num(j.at("objval"));
    r.nfac = j.at("nfac").get<int>();
    r.opencost = num(j.at("opencost"));
    r.congcost = num(j.at("congcost"));
    r.load = num(j.at("load"));
    r.cov = num(j.at("cov"));
    r.time_s = num(j.at("time_s"));
    r.gap_pct = num(j.at("gap_pct"));
    r.nodes = num(j.at("nodes"));
    r.bcuts = j.at("bcuts").get<long>();
    r.frbcuts = j.at("frbcuts").get<long>();
    r.status = j.at("status").get<std::string>();
    rows.push_back(std::move(r));
  }
  return rows;
}

PointMetrics point_metrics(const Instance& inst, const RobustConfig& cfg, const std::vector<double>& y,
                           const std::vector<std::vector<double>>& x) {
  const int nf = inst.num_facilities();
  std::vector<double> d_hat;
  for (const auto& c : inst.customers()) d_hat.push_back(c.deviation);
  PointMetrics m;
  double nominal = 0.0;
  for (int i = 0; i < nf; ++i) {
    const auto& f = inst.facilities()[i];
    const double yi = y[i] > 0.5 ? 1.0 : 0.0;
    std::vector<double> xi, dhi;
    double load = 0.0;
    for (int j : inst.covered_by(i)) {
      load += inst.customers()[j].demand * x[i][j];
      xi.push_back(x[i][j]);
      dhi.push_back(d_hat[j]);
    }
    nominal += load;
    if (cfg.protects_load()) load += oracle::alpha_bruteforce(xi, dhi, cfg.gamma);
    m.y.push_back(yi);
    m.v.push_back(load);
    m.nfac += static_cast<int>(yi);
    m.opencost += f.open_cost * yi;
    m.congcost += f.b * load + f.a * load * load;
  }
  m.objval = m.opencost + m.congcost;
  double total = 0.0;
  for (double v : m.v) total += v;
  m.load = nf > 0 ? total / nf : 0.0;
  m.cov = nominal - (cfg.protects_coverage() ? oracle::beta_bruteforce(x, d_hat, cfg.gamma) : 0.0);
  return m;
}

std::vector<std::vector<double>> recover_assignment(const Instance& inst, const RobustConfig& cfg,
                                                    const std::vector<double>& y,
                                                    const mip::SolverParams& params) {
  auto m = build_extended_robust(inst, cfg);
  for (int i = 0; i < inst.num_facilities(); ++i) {
    auto& var = m.vars[m.layout.y[i]];
    var.lower = var.upper = y[i] > 0.5 ? 1.0 : 0.0;
  }
  auto p = params;
  p.mip_gap = 0.0;
  const auto r = mip::solve_mip(m, p);
  if (r.incumbent.empty()) throw std::runtime_error("opening vector admits no feasible assignment");
  return assignment_from(m, r.incumbent, inst.num_facilities(), inst.num_customers());
}

RunResult run_method(const Instance& inst, const std::string& id, const RobustConfig& cfg, Method method,
                     const mip::SolverParams& params, bool audit) {
  check_config(inst, cfg);
  params.check();
  RunResult out;
  const int nf = inst.num_facilities();
  const int nc = inst.num_customers();
  std::vector<double> y;
  std::vector<std::vector<double>> x;

  if (!is_benders(method)) {
    const auto model = method == Method::Miqp ? build_extended_robust(inst, cfg) : build_perspective(inst, cfg);
    out.report = mip::solve_mip(model, params);
    if (!out.report.incumbent.empty()) {
      for (int i = 0; i < nf; ++i) y.push_back(out.report.incumbent[model.layout.y[i]]);
      x = assignment_from(model, out.report.incumbent, nf, nc);
    }
  } else {
    const bool eps = method == Method::StEpsBen || method == Method::MtEpsBen;
    const bool multi = method == Method::MtBen || method == Method::MtEpsBen;
    auto* a = audit ? &out.audit : nullptr;
    out.report = multi ? benders::solve_multi_tree(inst, cfg, params, eps, a)
                       : benders::solve_single_tree(inst, cfg, params, eps, a);
    if (!out.report.incumbent.empty()) {
      y.assign(out.report.incumbent.begin(), out.report.incumbent.begin() + nf);
      x = recover_assignment(inst, cfg, y, params);
    }
  }

  auto& r = out.row;
  r.id = id;
  r.seed = inst.meta().seed;
  r.radius = inst.radius();
  r.gamma = cfg.gamma;
  r.mode = to_string(cfg.mode);
  r.method = to_string(method);
  r.time_s = out.report.time;
  r.nodes = out.report.nodes;
  r.bcuts = out.report.bcuts;
  r.frbcuts = out.report.frbcuts;
  r.status = mip::to_string(out.report.status);
  if (!y.empty()) {
    const auto pm = point_metrics(inst, cfg, y, x);
    r.objval = pm.objval;
    r.nfac = pm.nfac;
    r.opencost = pm.opencost;
    r.congcost = pm.congcost;
    r.load = pm.load;
    r.cov = pm.cov;
    out.y = pm.y;
    out.v = pm.v;
  }
  const auto& rep = out.report;
  if (rep.status == mip::SolveStatus::Optimal) {
    r.gap_pct = 100.0 * (std::isfinite(rep.gap) ? rep.gap : 0.0);
  } else if (std::isfinite(rep.objective) && std::isfinite(rep.bound) && rep.objective != 0.0) {
    r.gap_pct = 100.0 * (rep.objective - rep.bound) / rep.objective;
  } else if (std::isfinite(rep.gap)) {
    r.gap_pct = 100.0 * rep.gap;
  }
  return out;
}

}  // namespace cpsclp
