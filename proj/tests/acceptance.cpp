// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "cpsclp/benders.hpp"
#include "cpsclp/oracle.hpp"
#include "cpsclp/report.hpp"
#include "cpsclp/sweep.hpp"
#include "support/fixtures.hpp"
#include "support/lp_oracle.hpp"

using namespace cpsclp;
using testing::rel_diff;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

struct SuiteCase {
  std::string id;
  Instance inst;
  RobustConfig cfg;
  std::map<Method, RunResult> runs;
};

const std::vector<Method> kAllMethods{Method::Miqp,  Method::Misocp, Method::StBen,
                                      Method::StEpsBen, Method::MtBen, Method::MtEpsBen};

// shared between criteria
std::vector<SuiteCase> suite;
std::vector<MetricsRow> emitted;
std::map<std::string, int> facility_count;  // by instance id

Verdict protection_queries() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int queries = 0;
  double worst = 0.0;
  for (int q = 0; q < 250; ++q) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const int nf = 1 + static_cast<int>(rng() % 3);
    const int g = static_cast<int>(rng() % (n + 1));
    std::vector<double> dh(n);
    for (auto& d : dh) d = std::floor(21 * unit(rng));
    std::vector<std::vector<double>> x(nf, std::vector<double>(n));
    for (auto& row : x)
      for (auto& e : row) e = unit(rng) < 0.3 ? 0.0 : unit(rng) / nf;
    worst = std::max(worst, std::abs(oracle::alpha_dual_lp(x[0], dh, g) - oracle::alpha_bruteforce(x[0], dh, g)));
    worst = std::max(worst, std::abs(oracle::beta_dual_lp(x, dh, g) - oracle::beta_bruteforce(x, dh, g)));
    queries += 2;
  }
  // the same quantities read off solved extended models
  int in_model = 0;
  for (std::uint64_t seed = 500; seed < 512; ++seed) {
    const auto inst = testing::small_instance(seed, 3, 10, 14);
    const RobustConfig cfg{static_cast<int>(seed % 11), UncertaintyMode::Both};
    const auto m = build_extended_robust(inst, cfg);
    const auto r = mip::solve_mip(m);
    if (r.incumbent.empty()) continue;
    std::vector<double> dh;
    for (const auto& c : inst.customers()) dh.push_back(c.deviation);
    std::vector<std::vector<double>> x(3, std::vector<double>(10, 0.0));
    std::vector<std::vector<double>> sigma = x;
    for (std::size_t k = 0; k < m.layout.pairs.size(); ++k) {
      const auto [i, j] = m.layout.pairs[k];
      x[i][j] = r.incumbent[m.layout.x[k]];
      sigma[i][j] = r.incumbent[m.layout.sigma[k]];
    }
    for (int i = 0; i < 3; ++i) {
      std::vector<double> xi, dhi;
      double dual = cfg.gamma * r.incumbent[m.layout.rho[i]];
      for (int j : inst.covered_by(i)) {
        xi.push_back(x[i][j]);
        dhi.push_back(dh[j]);
        dual += sigma[i][j];
      }
      worst = std::max(worst, std::abs(dual - oracle::alpha_bruteforce(xi, dhi, cfg.gamma)));
      ++queries;
      ++in_model;
    }
  }
  return {queries >= 200 && worst <= 1e-8,
          fmt::format("{} queries ({} read from solved models), max |LP - bruteforce| = {:.2e}", queries, in_model,
                      worst)};
}

Verdict whole_model_oracle() {
  std::mt19937_64 rng(77);
  int done = 0, attempts = 0;
  double worst = 0.0;
  std::string bad;
  while (done < 20 && attempts < 200) {
    ++attempts;
    GeneratorParams p;
    p.seed = rng();
    p.n_facilities = 2 + static_cast<int>(rng() % 3);
    p.n_customers = 4 + static_cast<int>(rng() % 5);
    p.radius = 12 + static_cast<double>(rng() % 8);
    p.costs.a = 0.0;
    Instance inst;
    try {
      inst = generate(p);
    } catch (const StructurallyInfeasible&) {
      continue;
    }
    const auto modes = {UncertaintyMode::Both, UncertaintyMode::LoadOnly, UncertaintyMode::CoverageOnly,
                        UncertaintyMode::Deterministic};
    const RobustConfig cfg{static_cast<int>(rng() % (p.n_customers + 1)), *(modes.begin() + done % 4)};
    double brute = 0.0;
    bool brute_ok = true;
    try {
      brute = oracle::robust_lp_optimum_bruteforce(inst, cfg).objective;
    } catch (const std::runtime_error&) {
      brute_ok = false;
    }
    const auto r = mip::solve_mip(build_extended_robust(inst, cfg));
    if (!brute_ok) {
      if (r.status != mip::SolveStatus::Infeasible) bad = "solver found a point the enumeration calls infeasible";
      continue;
    }
    if (r.status != mip::SolveStatus::Optimal) {
      bad = "solver status " + mip::to_string(r.status);
      continue;
    }
    worst = std::max(worst, std::abs(r.objective - brute) / std::max(1.0, std::abs(brute)));
    ++done;
  }
  return {done == 20 && worst <= 1e-7 && bad.empty(),
          fmt::format("{} instances, max relative difference {:.2e}{}", done, worst, bad.empty() ? "" : "; " + bad)};
}

int skipped_infeasible = 0;

void build_suite() {
  const std::vector<std::pair<int, int>> sizes{{6, 20}, {8, 30}, {10, 35}, {10, 40}};
  const std::vector<double> pct{10, 30, 50};
  std::uint64_t seed = 1000;
  while (suite.size() < 20) {
    const auto [nf, nc] = sizes[suite.size() % sizes.size()];
    GeneratorParams p;
    p.seed = seed++;
    p.n_facilities = nf;
    p.n_customers = nc;
    SuiteCase c;
    try {
      c.inst = generate(p);
    } catch (const StructurallyInfeasible&) {
      continue;
    }
    c.id = fmt::format("g{}-{}x{}", p.seed, nf, nc);
    facility_count[c.id] = nf;
    c.cfg = {static_cast<int>(std::lround(pct[suite.size() % 3] / 100.0 * nc)), UncertaintyMode::Both};
    // opening everything is the loosest point, so a feasible relaxation means a feasible instance
    if (!mip::solve_relaxation(build_perspective(c.inst, c.cfg)).feasible) {
      ++skipped_infeasible;
      continue;
    }
    suite.push_back(std::move(c));
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < suite.size() * kAllMethods.size(); k = next++) {
      auto& c = suite[k / kAllMethods.size()];
      const auto m = kAllMethods[k % kAllMethods.size()];
      mip::SolverParams params;
      params.time_limit = 600;
      RunResult r;
      try {
        r = run_method(c.inst, c.id, c.cfg, m, params, true);
      } catch (const std::exception& e) {
        r.row.id = c.id;
        r.row.gamma = c.cfg.gamma;
        r.row.method = to_string(m);
        r.row.status = std::string("Error(") + e.what() + ")";
      }
      static std::mutex mu;
      std::lock_guard<std::mutex> lock(mu);
      c.runs[m] = std::move(r);
    }
  };
  const unsigned jobs = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& c : suite)
    for (const auto& [m, r] : c.runs) emitted.push_back(r.row);
}

Verdict six_methods() {
  double worst = 0.0;
  int solved = 0;
  std::string bad;
  for (const auto& c : suite) {
    const double ref = c.runs.at(Method::Misocp).row.objval;
    for (const auto& [m, r] : c.runs) {
      if (r.row.status != "Optimal") {
        bad += fmt::format(" {}/{}:{}", c.id, to_string(m), r.row.status);
        continue;
      }
      ++solved;
      worst = std::max(worst, rel_diff(r.row.objval, ref));
    }
  }
  return {bad.empty() && worst <= 1e-5,
          fmt::format("{} instances x 6 methods ({} robust-infeasible draws skipped), {} solved, max relative spread {:.2e}{}",
                      suite.size(), skipped_infeasible, solved, worst,
                      bad.empty() ? "" : "; unsolved:" + bad)};
}

Verdict bound_dominance() {
  int strict = 0, ok = 0;
  double worst = kNaN;
  for (const auto& c : suite) {
    const auto e = mip::solve_relaxation(build_extended_robust(c.inst, c.cfg));
    const auto p = mip::solve_relaxation(build_perspective(c.inst, c.cfg));
    const double tol = 1e-9 * std::max(1.0, std::abs(e.upper));
    const double margin = p.lower - e.upper;
    worst = std::isnan(worst) ? margin : std::min(worst, margin);
    ok += margin >= -tol;
    strict += margin > tol;
  }
  const int n = static_cast<int>(suite.size());
  return {ok == n && 2 * strict >= n,
          fmt::format("perspective >= extended on {}/{}, strictly on {}/{}, smallest margin {:.4g}", ok, n, strict, n,
                      worst)};
}

Verdict gamma_shape() {
  SweepSpec spec;
  for (std::uint64_t seed = 2000; spec.instances.size() < 5; ++seed) {
    GeneratorParams p;
    p.seed = seed;
    p.n_facilities = 8;
    p.n_customers = 30;
    try {
      spec.instances.push_back({fmt::format("g{}-8x30", seed), generate(p)});
      facility_count[spec.instances.back().id] = 8;
    } catch (const StructurallyInfeasible&) {
    }
  }
  spec.modes = {UncertaintyMode::Both, UncertaintyMode::LoadOnly, UncertaintyMode::CoverageOnly,
                UncertaintyMode::Deterministic};
  spec.methods = {Method::Misocp};
  spec.params.time_limit = 600;
  spec.jobs = static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
  const auto rows = run_sweep(spec);
  emitted.insert(emitted.end(), rows.begin(), rows.end());

  std::map<std::string, std::map<std::string, std::map<int, const MetricsRow*>>> by;  // id, mode, gamma
  std::string bad;
  for (const auto& r : rows) {
    if (r.status != "Optimal") bad += fmt::format(" {}/{}/{}:{}", r.id, r.mode, r.gamma, r.status);
    by[r.id][r.mode][r.gamma] = &r;
  }
  auto geq = [](double a, double b) { return a >= b - 1e-6 * std::max(1.0, std::abs(b)); };
  int mono_fail = 0, cov_fail = 0, sat_fail = 0, order_fail = 0;
  std::vector<int> stars;
  for (const auto& [id, modes] : by) {
    for (const auto& [mode, series] : modes) {
      const MetricsRow* prev = nullptr;
      for (const auto& [g, r] : series) {
        if (prev && !geq(r->objval, prev->objval)) ++mono_fail;
        prev = r;
      }
    }
    for (const auto& [g, r] : modes.at("load")) {
      for (const auto& ni : spec.instances)
        if (ni.id == id && std::abs(r->cov - ni.instance.target_demand()) > 1e-6) ++cov_fail;
    }
    for (const auto& [g, both] : modes.at("both")) {
      const double cov = modes.at("coverage").at(g)->objval;
      const double load = modes.at("load").at(g)->objval;
      const double det = modes.at("det").at(g)->objval;
      if (!geq(both->objval, std::max(cov, load)) || !geq(std::min(cov, load), det)) ++order_fail;
    }
  }
  for (const auto& s : gamma_stars(rows)) {
    if (s.mode == "det") continue;
    if (s.gamma_star < 0) {
      ++sat_fail;
      continue;
    }
    stars.push_back(s.gamma_star);
    const auto& series = by.at(s.id).at(s.mode);
    const double top = series.rbegin()->second->objval;
    for (const auto& [g, r] : series)
      if (g >= s.gamma_star && std::abs(r->objval - top) > 1e-6 * std::max(1.0, std::abs(top))) ++sat_fail;
  }
  std::string star_text;
  for (int s : stars) star_text += fmt::format("{} ", s);
  return {bad.empty() && mono_fail + cov_fail + sat_fail + order_fail == 0,
          fmt::format("{} rows; (a) monotonicity violations {}; (b) load-only Cov != D {}; (c) saturation "
                      "failures {}, gamma* (|J|=30) = {}; (d) ordering violations {}{}",
                      rows.size(), mono_fail, cov_fail, sat_fail, star_text, order_fail,
                      bad.empty() ? "" : "; unsolved:" + bad)};
}

Verdict epsilon_effect() {
  std::map<Method, std::vector<double>> cuts;
  for (const auto& c : suite)
    for (const auto& [m, r] : c.runs) cuts[m].push_back(static_cast<double>(r.report.bcuts));
  const double st = mean(cuts[Method::StBen]), ste = mean(cuts[Method::StEpsBen]);
  const double mt = mean(cuts[Method::MtBen]), mte = mean(cuts[Method::MtEpsBen]);
  auto red = [](double a, double b) { return a > 0 ? 100.0 * (a - b) / a : 0.0; };

  // re-evaluate the plain single-tree anchors both ways to see what the perturbation does to the coefficients
  long anchors = 0, changed = 0, smaller = 0;
  mip::SolverParams p;
  for (const auto& c : suite) {
    const auto it = c.runs.find(Method::StBen);
    if (it == c.runs.end()) continue;
    for (const auto& cut : it->second.audit.cuts) {
      benders::Subproblem plain(c.inst, c.cfg), eps(c.inst, c.cfg);
      const auto a = plain.evaluate(cut.y_anchor, cut.v_anchor, false, p);
      const auto b = eps.evaluate(cut.y_anchor, cut.v_anchor, true, p);
      bool differs = false, no_larger = true;
      for (std::size_t i = 0; i < a.ry.size(); ++i) {
        differs |= std::abs(a.ry[i] - b.ry[i]) > 1e-9 || std::abs(a.rv[i] - b.rv[i]) > 1e-9;
        no_larger &= b.ry[i] <= a.ry[i] + 1e-9 && b.rv[i] <= a.rv[i] + 1e-9;
      }
      ++anchors;
      changed += differs;
      smaller += differs && no_larger;
    }
  }
  return {ste < st && mte < mt,
          fmt::format("mean BCuts ST {:.2f} -> STeps {:.2f} ({:.1f}% reduction), MT {:.2f} -> MTeps {:.2f} ({:.1f}% "
                      "reduction); at {} ST anchors the perturbation changed the coefficients {} times, "
                      "componentwise smaller {} times",
                      st, ste, red(st, ste), mt, mte, red(mt, mte), anchors, changed, smaller)};
}

Verdict cut_audit() {
  long cuts = 0, unviolated = 0, invalid = 0;
  double worst = 0.0;
  for (const auto& c : suite) {
    const auto& star = c.runs.at(Method::Misocp);
    if (star.y.empty()) {
      ++invalid;
      continue;
    }
    for (const auto& [m, r] : c.runs) {
      for (const auto& cut : r.audit.cuts) {
        ++cuts;
        if (!(cut.lhs(cut.y_anchor, cut.v_anchor) < cut.target)) ++unviolated;
        const double short_by = cut.target - cut.lhs(star.y, star.v);
        worst = std::max(worst, short_by);
        if (short_by > 1e-7) ++invalid;
      }
    }
  }
  return {cuts > 0 && unviolated == 0 && invalid == 0,
          fmt::format("{} cuts; not violated at anchor {}; violated by the direct optimum {} (largest shortfall "
                      "{:.2e})",
                      cuts, unviolated, invalid, worst)};
}

Verdict lp_core() {
  std::mt19937_64 rng(8080);
  int lps = 0, feasible = 0, mismatch = 0;
  double worst = 0.0;
  while (lps < 500) {
    const auto p = testing::random_lp(rng, 8, 6);
    const auto o = testing::enumerate_vertices(p);
    const auto s = lp::solve(p);
    ++lps;
    if (!o.feasible) {
      mismatch += s.status != lp::Status::Infeasible;
      continue;
    }
    ++feasible;
    if (s.status != lp::Status::Optimal) {
      ++mismatch;
      continue;
    }
    const double d = std::abs(s.objective - o.objective);
    worst = std::max(worst, d);
    mismatch += d > 1e-9;
  }
  int probes = 0, fd_fail = 0;
  double fd_worst = 0.0;
  for (int trial = 0; trial < 20000 && probes < 100; ++trial) {
    auto p = testing::random_lp(rng, 8, 6);
    const int j = static_cast<int>(rng() % p.num_vars());
    const double lo = p.lower(j), hi = p.upper(j);
    if (hi - lo < 1.0) continue;
    const double t = lo + 0.37 * (hi - lo);
    const double delta = 1e-5;
    lp::set_bounds(p, j, t, t);
    const auto mid = lp::solve(p);
    if (mid.status != lp::Status::Optimal) continue;
    lp::set_bounds(p, j, t + delta, t + delta);
    const auto up = lp::solve(p);
    lp::set_bounds(p, j, t - delta, t - delta);
    const auto down = lp::solve(p);
    if (up.status != lp::Status::Optimal || down.status != lp::Status::Optimal) continue;
    const double right = (up.objective - mid.objective) / delta;
    const double left = (mid.objective - down.objective) / delta;
    if (std::abs(right - left) > 1e-6 * std::max(1.0, std::abs(right))) continue;  // kink
    ++probes;
    const double rel = std::abs(mid.reduced_costs[j] - right) / std::max(1.0, std::abs(right));
    fd_worst = std::max(fd_worst, rel);
    fd_fail += rel > 1e-3;
  }
  return {mismatch == 0 && probes >= 100 && fd_fail == 0,
          fmt::format("{} LPs ({} feasible), {} mismatches, max |obj - oracle| {:.2e}; {} FD probes, max relative "
                      "error {:.2e}",
                      lps, feasible, mismatch, worst, probes, fd_worst)};
}

Verdict back_conversion() {
  long pairs = 0, bad = 0;
  double worst = 0.0;
  for (const auto& c : suite)
    for (const auto& [m, r] : c.runs)
      for (const auto& [back, direct] : r.audit.phi_pairs) {
        ++pairs;
        worst = std::max(worst, std::abs(back - direct));
        bad += std::abs(back - direct) > 1e-6;
      }
  // plus random degenerate anchors
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  mip::SolverParams params;
  for (const auto& c : suite) {
    benders::Subproblem sub(c.inst, c.cfg);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> y, v;
      for (int i = 0; i < c.inst.num_facilities(); ++i) {
        y.push_back(unit(rng) < 0.5 ? 0.0 : 1.0);
        v.push_back(y.back() == 0.0 || unit(rng) < 0.3 ? 0.0 : unit(rng) * c.inst.load_cap(i));
      }
      const auto e = sub.evaluate(y, v, true, params, true);
      if (!e.perturbed) continue;
      ++pairs;
      worst = std::max(worst, std::abs(e.phi - *e.phi_direct));
      bad += std::abs(e.phi - *e.phi_direct) > 1e-6;
    }
  }
  return {pairs > 0 && bad == 0,
          fmt::format("{} perturbed evaluations, {} off by more than 1e-6, max difference {:.2e}", pairs, bad, worst)};
}

Verdict metric_identities() {
  long rows = 0, decomp = 0, zero = 0, zero_rows = 0;
  double worst = 0.0;
  for (const auto& r : emitted) {
    if (std::isnan(r.objval)) continue;
    ++rows;
    const double d = std::abs(r.objval - (r.opencost + r.congcost));
    worst = std::max(worst, d);
    decomp += d > 1e-6;
    if (r.gamma != 0) continue;
    ++zero_rows;
    // Load is a mean over all of I, which the row does not carry
    const double z = std::abs(r.load * facility_count.at(r.id) - r.cov);
    worst = std::max(worst, z);
    zero += z > 1e-6;
  }
  return {rows > 0 && zero_rows > 0 && decomp == 0 && zero == 0,
          fmt::format("{} rows ({} at gamma 0); decomposition violations {}, Load*|I| != Cov violations {}, max "
                      "residual {:.2e}",
                      rows, zero_rows, decomp, zero, worst)};
}

}  // namespace

int main() {
  int failed = 0;
  auto run = [&](int k, const char* title, const std::function<Verdict()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("criterion {:>2} {} {}: {} [{:.1f}s]\n", k, v.pass ? "PASS" : "FAIL", title, v.detail, t);
    std::fflush(stdout);
    failed += !v.pass;
  };

  run(1, "dualization equivalence", protection_queries);
  run(2, "whole-model oracle agreement", whole_model_oracle);
  run(3, "six-method cross-agreement", [] {
    build_suite();
    return six_methods();
  });
  run(4, "perspective bound dominance", bound_dominance);
  run(5, "budget sensitivity shape", gamma_shape);
  run(6, "epsilon technique effectiveness", epsilon_effect);
  run(7, "cut audit", cut_audit);
  run(8, "LP core correctness", lp_core);
  run(9, "perturbation back-conversion", back_conversion);
  run(10, "metric identities", metric_identities);
  return failed == 0 ? 0 : 1;
}
