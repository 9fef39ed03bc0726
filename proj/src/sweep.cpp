#include "cpsclp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "cpsclp/log.hpp"

namespace cpsclp {

const std::vector<double>& default_gamma_percents() {
  static const std::vector<double> grid{0, 2.5, 5, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  return grid;
}

std::vector<int> gamma_grid(const std::vector<double>& percents, int num_customers) {
  std::vector<int> out;
  for (double p : percents) {
    const int g = static_cast<int>(std::lround(p / 100.0 * num_customers));
    out.push_back(std::clamp(g, 0, num_customers));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MetricsRow> run_sweep(const SweepSpec& spec, const std::function<void(const MetricsRow&)>& on_row) {
  struct Cell {
    const NamedInstance* inst;
    RobustConfig cfg;
    Method method;
  };
  std::vector<Cell> cells;
  for (const auto& ni : spec.instances)
    for (int g : gamma_grid(spec.percents, ni.instance.num_customers()))
      for (auto mode : spec.modes)
        for (auto method : spec.methods) cells.push_back({&ni, {g, mode}, method});

  std::vector<MetricsRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& c = cells[k];
      MetricsRow row;
      try {
        row = run_method(c.inst->instance, c.inst->id, c.cfg, c.method, spec.params).row;
      } catch (const std::exception& e) {
        row.id = c.inst->id;
        row.seed = c.inst->instance.meta().seed;
        row.radius = c.inst->instance.radius();
        row.gamma = c.cfg.gamma;
        row.mode = to_string(c.cfg.mode);
        row.method = to_string(c.method);
        row.status = "Error";
        log_at(LogLevel::Quiet, "{} gamma={} mode={} method={}: {}", row.id, row.gamma, row.mode, row.method,
               e.what());
      }
      std::lock_guard<std::mutex> lock(mu);
      rows[k] = row;
      log_at(LogLevel::Info, "{}", to_csv_line(row));
      if (on_row) on_row(row);
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<GammaStar> gamma_stars(const std::vector<MetricsRow>& rows, double rel_tol) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) groups[{r.id, r.mode, r.method}].push_back(&r);
  std::vector<GammaStar> out;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->gamma < b->gamma; });
    GammaStar s{std::get<0>(key), std::get<1>(key), std::get<2>(key), -1};
    const auto* top = group.back();
    if (top->status == "Optimal") {
      for (const auto* r : group) {
        if (r->status != "Optimal") continue;
        if (std::abs(r->objval - top->objval) <= rel_tol * std::max(1.0, std::abs(top->objval))) {
          s.gamma_star = r->gamma;
          break;
        }
      }
    }
    out.push_back(s);
  }
  return out;
}

std::string to_csv(const std::vector<GammaStar>& stars) {
  std::string out = "id,mode,method,gamma_star\n";
  for (const auto& s : stars) out += fmt::format("{},{},{},{}\n", s.id, s.mode, s.method, s.gamma_star);
  return out;
}

std::map<std::string, std::vector<std::pair<double, double>>> solution_profile(const std::vector<MetricsRow>& rows) {
  std::map<std::string, std::vector<double>> solved;
  std::map<std::string, int> total;
  for (const auto& r : rows) {
    ++total[r.method];
    auto& s = solved[r.method];
    if (r.status == "Optimal") s.push_back(r.time_s);
  }
  std::map<std::string, std::vector<std::pair<double, double>>> out;
  for (auto& [method, times] : solved) {
    auto& series = out[method];
    std::sort(times.begin(), times.end());
    const double n = total[method];
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double frac = static_cast<double>(k + 1) / n;
      if (!series.empty() && series.back().first == times[k])
        series.back().second = frac;
      else
        series.emplace_back(times[k], frac);
    }
    if (series.empty()) series.emplace_back(0.0, 0.0);
  }
  return out;
}

std::string profile_csv(const std::map<std::string, std::vector<std::pair<double, double>>>& profile) {
  std::string out = "method,time_s,fraction\n";
  for (const auto& [method, series] : profile)
    for (const auto& [t, f] : series) out += fmt::format("{},{:.2f},{:.6f}\n", method, t, f);
  return out;
}

}  // namespace cpsclp
