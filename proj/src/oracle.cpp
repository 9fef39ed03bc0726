#include "cpsclp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "cpsclp/lp.hpp"

namespace cpsclp::oracle {

namespace {

double top_sum(std::vector<double> values, int gamma) {
  const int k = std::clamp(gamma, 0, static_cast<int>(values.size()));
  std::partial_sort(values.begin(), values.begin() + k, values.end(), std::greater<>());
  double s = 0.0;
  for (int t = 0; t < k; ++t) s += values[t];
  return s;
}

double subset_max(const std::vector<double>& values, int gamma) {
  const int n = static_cast<int>(values.size());
  if (n > 20) throw std::invalid_argument("subset enumeration limited to 20 items");
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > gamma) continue;
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) s += values[j];
    best = std::max(best, s);
  }
  return best;
}

std::vector<double> products(const std::vector<double>& x, const std::vector<double>& d_hat) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = d_hat[j] * x[j];
  return out;
}

std::vector<double> aggregates(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat) {
  std::vector<double> out(d_hat.size(), 0.0);
  for (std::size_t j = 0; j < d_hat.size(); ++j) {
    double col = 0.0;
    for (const auto& row : x) col += row[j];
    out[j] = d_hat[j] * col;
  }
  return out;
}

// min gamma*r + sum s_j  s.t.  r + s_j >= w_j, r, s >= 0
double dual_lp(const std::vector<double>& w, int gamma) {
  lp::LpProblem p;
  const int r = p.add_variable(0.0, lp::kInf, gamma);
  for (double wj : w) {
    const int s = p.add_variable(0.0, lp::kInf, 1.0);
    p.add_row({r, s}, {1.0, 1.0}, lp::RowSense::GreaterEqual, wj);
  }
  const auto sol = lp::solve(p);
  if (sol.status != lp::Status::Optimal) throw std::runtime_error("protection LP not optimal");
  return sol.objective;
}

std::vector<std::vector<int>> subsets_up_to(const std::vector<int>& items, int gamma) {
  std::vector<std::vector<int>> out;
  const int n = static_cast<int>(items.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > gamma) continue;
    std::vector<int> s;
    for (int t = 0; t < n; ++t)
      if (mask & (1u << t)) s.push_back(items[t]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

double alpha_bruteforce(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma) {
  return top_sum(products(x, d_hat), gamma);
}

double alpha_enumerate(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma) {
  return subset_max(products(x, d_hat), gamma);
}

double beta_bruteforce(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                       int gamma) {
  return top_sum(aggregates(x, d_hat), gamma);
}

double beta_enumerate(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                      int gamma) {
  return subset_max(aggregates(x, d_hat), gamma);
}

double alpha_dual_lp(const std::vector<double>& x, const std::vector<double>& d_hat, int gamma) {
  return dual_lp(products(x, d_hat), gamma);
}

double beta_dual_lp(const std::vector<std::vector<double>>& x, const std::vector<double>& d_hat,
                    int gamma) {
  return dual_lp(aggregates(x, d_hat), gamma);
}

EnumerationResult robust_lp_optimum_bruteforce(const Instance& inst, const RobustConfig& config) {
  check_config(inst, config);
  const int nf = inst.num_facilities();
  const int nc = inst.num_customers();
  if (nf > 10 || nc > 16) throw std::invalid_argument("enumeration oracle is for tiny instances");
  for (const auto& f : inst.facilities())
    if (f.a != 0.0) throw std::invalid_argument("enumeration oracle needs linear congestion (a = 0)");
  const auto& cust = inst.customers();
  const int gamma = config.mode == UncertaintyMode::Deterministic ? 0 : config.gamma;

  // pairs grouped by customer
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < nc; ++j)
    for (int i : inst.covering(j)) pairs.emplace_back(i, j);
  std::vector<int> coverable;
  for (int j = 0; j < nc; ++j)
    if (!inst.covering(j).empty()) coverable.push_back(j);

  const auto cov_subsets =
      config.protects_coverage() ? subsets_up_to(coverable, gamma) : std::vector<std::vector<int>>{{}};
  std::vector<std::vector<std::vector<int>>> load_subsets(nf);
  for (int i = 0; i < nf; ++i)
    load_subsets[i] = config.protects_load() ? subsets_up_to(inst.covered_by(i), gamma)
                                             : std::vector<std::vector<int>>{{}};

  EnumerationResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << nf); ++mask) {
    lp::LpProblem p;
    std::vector<std::vector<int>> xcol(nf, std::vector<int>(nc, -1));
    for (auto [i, j] : pairs) xcol[i][j] = p.add_variable(0.0, (mask >> i) & 1u ? 1.0 : 0.0, 0.0);
    std::vector<int> vcol(nf);
    for (int i = 0; i < nf; ++i) vcol[i] = p.add_variable(0.0, lp::kInf, inst.facilities()[i].b);

    for (int i = 0; i < nf; ++i) {
      for (const auto& s : load_subsets[i]) {
        std::vector<int> idx{vcol[i]};
        std::vector<double> val{1.0};
        for (int j : inst.covered_by(i)) {
          double coef = cust[j].demand;
          if (std::find(s.begin(), s.end(), j) != s.end()) coef += cust[j].deviation;
          idx.push_back(xcol[i][j]);
          val.push_back(-coef);
        }
        p.add_row(std::move(idx), std::move(val), lp::RowSense::GreaterEqual, 0.0);
      }
    }
    for (const auto& s : cov_subsets) {
      std::vector<int> idx;
      std::vector<double> val;
      for (auto [i, j] : pairs) {
        double coef = cust[j].demand;
        if (std::find(s.begin(), s.end(), j) != s.end()) coef -= cust[j].deviation;
        idx.push_back(xcol[i][j]);
        val.push_back(coef);
      }
      p.add_row(std::move(idx), std::move(val), lp::RowSense::GreaterEqual, inst.target_demand());
    }
    for (int j : coverable) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int i : inst.covering(j)) {
        idx.push_back(xcol[i][j]);
        val.push_back(1.0);
      }
      p.add_row(std::move(idx), std::move(val), lp::RowSense::LessEqual, 1.0);
    }

    const auto sol = lp::solve(p);
    if (sol.status != lp::Status::Optimal) continue;
    double open = 0.0;
    for (int i = 0; i < nf; ++i)
      if ((mask >> i) & 1u) open += inst.facilities()[i].open_cost;
    const double total = open + sol.objective;
    if (total < best.objective) {
      best.objective = total;
      best.y.assign(nf, 0);
      for (int i = 0; i < nf; ++i) best.y[i] = (mask >> i) & 1u;
      best.x.assign(nf, std::vector<double>(nc, 0.0));
      best.nominal_coverage = 0.0;
      for (auto [i, j] : pairs) {
        best.x[i][j] = sol.x[xcol[i][j]];
        best.nominal_coverage += cust[j].demand * best.x[i][j];
      }
      best.v.assign(nf, 0.0);
      for (int i = 0; i < nf; ++i) best.v[i] = sol.x[vcol[i]];
    }
  }
  if (!std::isfinite(best.objective)) throw std::runtime_error("no opening vector is feasible");
  return best;
}

}  // namespace cpsclp::oracle
