#include <cstring>

#include "cpsclp/report.hpp"
#include "cpsclp/sweep.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace cpsclp;
using testing::rel_diff;

namespace {

bool same_bits(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::memcmp(&a, &b, sizeof a) == 0;
}

MetricsRow sample_row() {
  MetricsRow r;
  r.id = "g1-5x20";
  r.seed = 18446744073709551615ull;
  r.radius = 14;
  r.gamma = 4;
  r.mode = "both";
  r.method = "mt-ben";
  r.objval = 1234.5678;
  r.nfac = 3;
  r.opencost = 1000.004;
  r.congcost = 234.5638;
  r.load = 27.125;
  r.cov = 600;
  r.time_s = 0.0049;
  r.gap_pct = -1e-12;
  r.nodes = 7.333333;
  r.bcuts = 12;
  r.frbcuts = 3;
  r.status = "Optimal";
  return r;
}

MetricsRow solved(const std::string& method, double t) {
  MetricsRow r = sample_row();
  r.method = method;
  r.time_s = t;
  return r;
}

}  // namespace

TEST_CASE("CSV rows round-trip through their printed form") {
  auto a = sample_row();
  auto b = sample_row();
  b.objval = b.opencost = b.congcost = b.load = b.cov = b.gap_pct = kNaN;
  b.status = "TimeLimit";
  const auto text = to_csv({a, b});
  CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(to_csv_line(a) == "g1-5x20,18446744073709551615,14.00,4,both,mt-ben,1234.57,3,1000.00,234.56,27.12,600.00,0.00,0.00,7.33,12,3,Optimal");
  const auto rows = parse_csv(text);
  REQUIRE(rows.size() == 2);
  CHECK(to_csv(rows) == text);
  CHECK(same_bits(rows[0].objval, 1234.57));
  CHECK(same_bits(rows[0].nodes, 7.33));
  CHECK(rows[0].seed == a.seed);
  CHECK(std::isnan(rows[1].objval));
  const auto again = parse_csv(to_csv(rows));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(same_bits(again[k].objval, rows[k].objval));
    CHECK(same_bits(again[k].load, rows[k].load));
    CHECK(same_bits(again[k].time_s, rows[k].time_s));
  }
}

TEST_CASE("JSON sidecar keeps full precision") {
  auto a = sample_row();
  a.objval = 0.1 + 0.2;
  a.cov = kNaN;
  const auto back = rows_from_json(to_json({a}));
  REQUIRE(back.size() == 1);
  CHECK(same_bits(back[0].objval, a.objval));
  CHECK(same_bits(back[0].nodes, a.nodes));
  CHECK(same_bits(back[0].gap_pct, a.gap_pct));
  CHECK(std::isnan(back[0].cov));
  CHECK(back[0].seed == a.seed);
}

TEST_CASE("malformed CSV is rejected") {
  CHECK_THROWS_AS(parse_csv("id,seed\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,1,2\n"), std::runtime_error);
  auto line = to_csv_line(sample_row());
  line.replace(line.find(",4,"), 3, ",x,");
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n" + line + "\n"), std::runtime_error);
}

TEST_CASE("budget grid") {
  CHECK(gamma_grid(default_gamma_percents(), 50) ==
        std::vector<int>{0, 1, 3, 5, 8, 10, 15, 20, 25, 30, 35, 40, 45, 50});
  const auto g20 = gamma_grid(default_gamma_percents(), 20);
  CHECK(g20.front() == 0);
  CHECK(g20.back() == 20);
  CHECK(std::is_sorted(g20.begin(), g20.end()));
  CHECK(std::adjacent_find(g20.begin(), g20.end()) == g20.end());
}

TEST_CASE("solution profile") {
  std::vector<MetricsRow> rows{solved("misocp", 1), solved("misocp", 2), solved("misocp", 3), solved("misocp", 900)};
  rows.back().status = "TimeLimit";
  auto prof = solution_profile(rows);
  CHECK(prof["misocp"] == std::vector<std::pair<double, double>>{{1, 0.25}, {2, 0.5}, {3, 0.75}});

  auto none = solved("miqp", 900);
  none.status = "TimeLimit";
  prof = solution_profile({none, none});
  CHECK(prof["miqp"] == std::vector<std::pair<double, double>>{{0, 0}});

  std::vector<MetricsRow> twin;
  for (auto r : rows) {
    twin.push_back(r);
    r.method = "st-ben";
    twin.push_back(r);
  }
  prof = solution_profile(twin);
  CHECK(prof["misocp"] == prof["st-ben"]);
  CHECK(profile_csv(prof).find("st-ben,3.00,0.750000") != std::string::npos);
}

TEST_CASE("saturation budget") {
  std::vector<MetricsRow> rows;
  const std::vector<std::pair<int, double>> series{{0, 10}, {2, 12}, {4, 13}, {6, 13}, {8, 13 + 1e-9}};
  for (auto [g, v] : series) {
    auto r = sample_row();
    r.gamma = g;
    r.objval = v;
    rows.push_back(r);
  }
  auto stars = gamma_stars(rows);
  REQUIRE(stars.size() == 1);
  CHECK(stars[0].gamma_star == 4);
  rows.back().status = "TimeLimit";
  CHECK(gamma_stars(rows)[0].gamma_star == -1);
}

TEST_CASE("metric identities and formulation agreement") {
  const auto inst = testing::small_instance(81, 5, 16);
  mip::SolverParams p;
  for (int g : {0, 3}) {
    for (auto mode : {UncertaintyMode::Both, UncertaintyMode::LoadOnly, UncertaintyMode::CoverageOnly,
                      UncertaintyMode::Deterministic}) {
      const RobustConfig cfg{g, mode};
      std::vector<double> objs;
      for (auto m : {Method::Miqp, Method::Misocp, Method::StEpsBen, Method::MtBen}) {
        const auto r = run_method(inst, "t", cfg, m, p).row;
        CAPTURE(r.method);
        CAPTURE(r.mode);
        REQUIRE(r.status == "Optimal");
        CHECK(std::abs(r.objval - (r.opencost + r.congcost)) <= 1e-6);
        CHECK(r.cov >= inst.target_demand() - 1e-6);
        if (g == 0) CHECK(std::abs(r.load * inst.num_facilities() - r.cov) <= 1e-6);
        if (mode == UncertaintyMode::LoadOnly || mode == UncertaintyMode::Deterministic)
          CHECK(r.cov == doctest::Approx(inst.target_demand()).epsilon(1e-9));
        CHECK(r.gap_pct <= 1e-9);
        objs.push_back(r.objval);
      }
      for (double o : objs) CHECK(rel_diff(o, objs[0]) <= 1e-5);
    }
  }
  const auto det = run_method(inst, "t", {0, UncertaintyMode::Deterministic}, Method::Misocp, p).row;
  for (auto mode : {UncertaintyMode::Both, UncertaintyMode::LoadOnly, UncertaintyMode::CoverageOnly})
    CHECK(rel_diff(run_method(inst, "t", {0, mode}, Method::Misocp, p).row.objval, det.objval) <= 1e-9);
}

TEST_CASE("sweep runs every cell, in order, independent of the worker count") {
  SweepSpec spec;
  spec.instances.push_back({"a", testing::small_instance(90, 4, 12)});
  spec.percents = {0, 25, 50, 100};
  spec.methods = {Method::Misocp, Method::StEpsBen};
  const auto one = run_sweep(spec);
  spec.jobs = 3;
  int seen = 0;
  const auto three = run_sweep(spec, [&](const MetricsRow&) { ++seen; });
  REQUIRE(one.size() == 4 * 3 * 2);
  REQUIRE(three.size() == one.size());
  CHECK(seen == 24);
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].gamma == three[k].gamma);
    CHECK(one[k].method == three[k].method);
    CHECK(one[k].objval == doctest::Approx(three[k].objval).epsilon(1e-9));
    CHECK(one[k].status == "Optimal");
  }
  CHECK(one[0].gamma == 0);
  CHECK(one[0].mode == "both");
  CHECK(one[1].method == "steps-ben");
  for (const auto& s : gamma_stars(one)) CHECK(s.gamma_star >= 0);
}

TEST_CASE("failing cells are recorded and the sweep continues") {
  SweepSpec spec;
  spec.instances.push_back({"bad", testing::small_instance(91, 3, 8)});
  spec.percents = {0, 50};
  spec.modes = {UncertaintyMode::Both};
  spec.params.time_limit = -1;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.status == "Error");
    CHECK(r.id == "bad");
  }
}
