#pragma once

#include <vector>

#include "cpsclp/instance.hpp"

namespace cpsclp::oracle {

/// Sum of the gamma largest products d_hat[j] * x[j].
double alpha_bruteforce(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma);
/// Same value by enumerating every subset with at most gamma members (|J| <= 20).
double alpha_enumerate(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma);

/// x[i][j]; sum of the gamma largest column aggregates d_hat[j] * sum_i x[i][j].
double beta_bruteforce(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                       int gamma);
double beta_enumerate(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                      int gamma);

/// Optimal value of  min gamma*rho + sum sigma_j  s.t. rho + sigma_j >= d_hat[j]*x[j], solved by lp.
double alpha_dual_lp(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma);
/// Optimal value of  min gamma*tau + sum pi_j  s.t. tau + pi_j >= d_hat[j]*sum_i x[i][j].
double beta_dual_lp(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                    int gamma);

struct EnumerationResult {
  double objective = 0.0;
  std::vector<int> y;
  std::vector<std::vector<double>> x;  // x[i][j]
  std::vector<double> v;
  double nominal_coverage = 0.0;
};

/// Enumerates every opening vector and solves the continuous robust problem
/// with one explicit row per deviation subset. Requires a_i = 0 and tiny sizes
/// (|I| <= 10, |J| <= 16). Throws std::invalid_argument otherwise and
/// std::runtime_error when no opening vector is feasible.
EnumerationResult robust_lp_optimum_bruteforce(const Instance& instance, const RobustConfig& config);

}  // namespace cpsclp::oracle
