#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cpsclp/report.hpp"

namespace cpsclp {

/// Percentages of |J| used when no grid is given.
const std::vector<double>& default_gamma_percents();

/// Rounded budgets, clamped to [0, |J|], ascending and without repeats.
std::vector<int> gamma_grid(const std::vector<double>& percents, int num_customers);

struct NamedInstance {
  std::string id;
  Instance instance;
};

struct SweepSpec {
  std::vector<NamedInstance> instances;
  std::vector<double> percents = default_gamma_percents();
  std::vector<UncertaintyMode> modes{UncertaintyMode::Both, UncertaintyMode::LoadOnly,
                                     UncertaintyMode::CoverageOnly};
  std::vector<Method> methods{Method::Misocp};
  mip::SolverParams params;
  int jobs = 1;
};

/// One row per (instance, gamma, mode, method) in that nesting order. A cell
/// that throws yields a row with status "Error" and the sweep continues.
/// `on_row` is called from worker threads, serialized.
std::vector<MetricsRow> run_sweep(const SweepSpec& spec,
                                  const std::function<void(const MetricsRow&)>& on_row = {});

struct GammaStar {
  std::string id;
  std::string mode;
  std::string method;
  int gamma_star = -1;  // -1 when the largest budget was not solved
};

/// Smallest budget whose ObjVal equals the largest-budget ObjVal within
/// `rel_tol`, per (id, mode, method). Only Optimal rows take part.
std::vector<GammaStar> gamma_stars(const std::vector<MetricsRow>& rows, double rel_tol = 1e-6);
std::string to_csv(const std::vector<GammaStar>& stars);

/// Step series (time, fraction of the method's runs solved by that time).
/// A method without solved runs gets the single point (0, 0).
std::map<std::string, std::vector<std::pair<double, double>>> solution_profile(
    const std::vector<MetricsRow>& rows);
std::string profile_csv(const std::map<std::string, std::vector<std::pair<double, double>>>& profile);

}  // namespace cpsclp
