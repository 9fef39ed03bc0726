#include <random>

#include "cpsclp/mip.hpp"
#include "cpsclp/model.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace cpsclp;
using lp::RowSense;
using testing::rel_diff;

namespace {

ModelIR binaries_model(int n, const std::vector<double>& cost) {
  ModelIR m;
  for (int k = 0; k < n; ++k) m.add_var({"y" + std::to_string(k), VarKind::Binary, 0, 1, cost[k], 0});
  return m;
}

// random pure/mixed binary program and its brute-force optimum
struct RandomBip {
  ModelIR model;
  double optimum = 0.0;
  bool feasible = false;
};

RandomBip random_bip(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  RandomBip out;
  auto& m = out.model;
  const int nb = pick(2, 12);
  const int nc = pick(0, 3);
  for (int k = 0; k < nb; ++k) m.add_var({"y" + std::to_string(k), VarKind::Binary, 0, 1, double(pick(-9, 9)), 0});
  for (int k = 0; k < nc; ++k) m.add_var({"z" + std::to_string(k), VarKind::Continuous, 0, double(pick(1, 5)), double(pick(-5, 5)), 0});
  const int rows = pick(1, 5);
  for (int r = 0; r < rows; ++r) {
    LinearRow row;
    for (int k = 0; k < nb + nc; ++k) {
      if (pick(0, 1) == 0) continue;
      row.index.push_back(k);
      row.value.push_back(pick(-4, 6));
    }
    row.sense = pick(0, 3) == 0 ? RowSense::GreaterEqual : RowSense::LessEqual;
    row.rhs = pick(-2, 10);
    m.add_row(row);
  }
  // brute force: fix binaries and solve the LP in the continuous part
  out.optimum = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
    auto p = m.to_lp();
    for (int k = 0; k < nb; ++k) {
      const double val = (mask >> k) & 1u;
      p.set_bounds(k, val, val);
    }
    const auto s = lp::solve(p);
    if (s.status != lp::Status::Optimal) continue;
    out.feasible = true;
    out.optimum = std::min(out.optimum, s.objective);
  }
  return out;
}

}  // namespace

TEST_CASE("cone cut examples") {
  const auto cut = mip::separate_cone_cut(2, 1, 1, 1e-9);
  REQUIRE(cut);
  CHECK(cut->cv == doctest::Approx(2.0));
  CHECK(cut->cu == doctest::Approx(-1.0));
  CHECK(cut->cy == doctest::Approx(-1.0));
  CHECK(cut->rhs == doctest::Approx(0.0));
  CHECK_FALSE(mip::separate_cone_cut(1, 1, 1, 1e-9));
  CHECK_FALSE(mip::separate_cone_cut(0, 0, 0, 1e-9));
  CHECK(mip::separate_cone_cut(0.5, 0, 0, 1e-9));
}

TEST_CASE("cone cuts hold on every cone point and are tight on the boundary") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double v = 3 * unit(rng), u = 3 * unit(rng), y = unit(rng);
    const auto cut = mip::separate_cone_cut(v, u, y, 1e-9);
    if (!cut) {
      CHECK(v * v - u * y <= 1e-9 * std::max(1.0, v * v));
      continue;
    }
    CHECK(cut->cv * v + cut->cu * u + cut->cy * y > cut->rhs);
    for (int s = 0; s < 20; ++s) {
      const double yy = unit(rng), uu = 5 * unit(rng);
      const double vv = std::sqrt(uu * yy) * unit(rng);
      CHECK(cut->cv * vv + cut->cu * uu + cut->cy * yy <= cut->rhs + 1e-12);
    }
    const double n = std::sqrt(4 * v * v + (u - y) * (u - y));
    const double bu = (n + u - y) / 2, by = (n - u + y) / 2;
    CHECK(std::abs(cut->cv * v + cut->cu * bu + cut->cy * by - cut->rhs) <= 1e-9);
  }
}

TEST_CASE("branching picks the most fractional binary") {
  const std::vector<int> bins{0, 1};
  CHECK(mip::branch({}, {0.5, 0.0}, bins, 1e-9).var == 0);
  CHECK(mip::branch({}, {0.3, 0.5}, bins, 1e-9).var == 1);
  CHECK(mip::branch({}, {0.5, 0.5}, bins, 1e-9).var == 0);
  const auto b = mip::branch({{1, 1.0, 1.0}}, {0.5, 1.0}, bins, 1e-9);
  CHECK(b.down.size() == 2);
  CHECK(b.down.back().upper == 0.0);
  CHECK(b.up.back().lower == 1.0);
  CHECK_THROWS_AS(mip::branch({}, {1.0, 0.0}, bins, 1e-9), std::logic_error);
}

TEST_CASE("pure LP model matches the LP solver") {
  ModelIR m;
  const int x = m.add_var({"x", VarKind::Continuous, 0, 10, -1, 0});
  const int y = m.add_var({"y", VarKind::Continuous, 0, 10, -2, 0});
  m.add_row({{x, y}, {1, 1}, RowSense::LessEqual, 4, "c"});
  m.add_row({{x, y}, {1, 3}, RowSense::LessEqual, 6, "d"});
  const auto r = mip::solve_mip(m);
  const auto s = lp::solve(m.to_lp());
  REQUIRE(r.status == mip::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(s.objective));
  CHECK(r.nodes == 1);
}

TEST_CASE("knapsack toy") {
  auto m = binaries_model(2, {-1, -1});
  m.add_row({{0, 1}, {1, 1}, RowSense::LessEqual, 1, "k"});
  const auto r = mip::solve_mip(m);
  REQUIRE(r.status == mip::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-1.0));
  CHECK(r.nodes <= 3);
}

TEST_CASE("infeasible binary program") {
  auto m = binaries_model(2, {1, 1});
  m.add_row({{0, 1}, {1, 1}, RowSense::GreaterEqual, 3, "k"});
  CHECK(mip::solve_mip(m).status == mip::SolveStatus::Infeasible);
}

TEST_CASE("quadratic objective through tangent cuts") {
  ModelIR m;
  m.add_var({"v", VarKind::Continuous, 0, 10, -4, 1});
  const auto r = mip::solve_mip(m);
  REQUIRE(r.status == mip::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-4.0).epsilon(1e-7));
  CHECK(r.incumbent[0] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("random binary programs match enumeration under every strategy") {
  std::mt19937_64 rng(1234);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto bip = random_bip(rng);
    CAPTURE(trial);
    for (auto sel : {mip::NodeSelection::BestBound, mip::NodeSelection::DepthFirst}) {
      for (auto rule : {mip::BranchRule::MostFractional, mip::BranchRule::PseudoCost}) {
        mip::SolverParams p;
        p.node_selection = sel;
        p.branch_rule = rule;
        const auto r = mip::solve_mip(bip.model, p);
        if (!bip.feasible) {
          CHECK(r.status == mip::SolveStatus::Infeasible);
          continue;
        }
        REQUIRE(r.status == mip::SolveStatus::Optimal);
        CHECK(std::abs(r.objective - bip.optimum) <= 1e-7 * std::max(1.0, std::abs(bip.optimum)));
      }
    }
    checked += bip.feasible;
  }
  CHECK(checked > 40);
}

TEST_CASE("lazy cuts from the integer hook are respected") {
  auto m = binaries_model(3, {-1, -1, -1});
  mip::CallbackHooks hooks;
  int calls = 0;
  hooks.on_integer_candidate = [&](const std::vector<double>& y) -> std::vector<LinearRow> {
    ++calls;
    if (y[0] + y[1] > 1.5) return {{{0, 1}, {1, 1}, RowSense::LessEqual, 1, "lazy"}};
    return {};
  };
  const auto r = mip::solve_mip(m, {}, &hooks);
  REQUIRE(r.status == mip::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-2.0));
  CHECK(r.bcuts >= 1);
  CHECK(calls >= 2);
}

TEST_CASE("root fractional hook is capped") {
  auto m = binaries_model(2, {1, 1});
  m.add_row({{0, 1}, {2, 2}, RowSense::GreaterEqual, 1, "half"});
  mip::CallbackHooks hooks;
  int calls = 0;
  double rhs = 1.0;
  hooks.on_root_fractional = [&](const std::vector<double>&) -> std::vector<LinearRow> {
    ++calls;
    rhs += 0.1;
    return {{{0, 1}, {2, 2}, RowSense::GreaterEqual, rhs, "frac"}};
  };
  const auto r = mip::solve_mip(m, {}, &hooks);
  REQUIRE(r.status == mip::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(calls == 3);
  CHECK(r.frbcuts == 3);
}

TEST_CASE("perspective and extended models agree") {
  const auto inst = testing::small_instance(77, 4, 10);
  const RobustConfig cfg{3, UncertaintyMode::Both};
  const auto e = mip::solve_mip(build_extended_robust(inst, cfg));
  const auto p = mip::solve_mip(build_perspective(inst, cfg));
  REQUIRE(e.status == mip::SolveStatus::Optimal);
  REQUIRE(p.status == mip::SolveStatus::Optimal);
  CHECK(rel_diff(e.objective, p.objective) <= 1e-6);
  CHECK(e.gap <= 1e-6);
}

TEST_CASE("time limit returns a valid bound") {
  const auto inst = testing::small_instance(5, 12, 40);
  mip::SolverParams p;
  p.time_limit = 1e-3;
  const auto r = mip::solve_mip(build_extended_robust(inst, {4, UncertaintyMode::Both}), p);
  CHECK(r.status == mip::SolveStatus::TimeLimit);
  if (std::isfinite(r.objective)) CHECK(r.bound <= r.objective + 1e-9);
  CHECK(mip::to_json(r).find("\"status\": \"TimeLimit\"") != std::string::npos);
}

TEST_CASE("perspective relaxation dominates the extended one") {
  for (std::uint64_t seed = 90; seed < 94; ++seed) {
    const auto inst = testing::small_instance(seed, 6, 20);
    const RobustConfig cfg{4, UncertaintyMode::Both};
    const auto e = mip::solve_relaxation(build_extended_robust(inst, cfg));
    const auto p = mip::solve_relaxation(build_perspective(inst, cfg));
    REQUIRE(e.feasible);
    REQUIRE(p.feasible);
    CHECK(e.lower <= e.upper + 1e-9 * std::abs(e.upper));
    CHECK(p.lower >= e.upper - 1e-9 * std::abs(e.upper));
  }
}
