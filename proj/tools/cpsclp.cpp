// Command-line front end: generate, solve, sweep, profile.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cpsclp/report.hpp"
#include "cpsclp/sweep.hpp"
#include "json.hpp"

using namespace cpsclp;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitTimeLimit = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

GeneratorParams parse_generate(const std::string& text) {
  GeneratorParams p;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--generate expects key=value pairs, got '" + item + "'");
    const auto key = item.substr(0, eq);
    const auto val = item.substr(eq + 1);
    try {
      if (key == "seed") p.seed = std::stoull(val);
      else if (key == "nf") p.n_facilities = std::stoi(val);
      else if (key == "nc") p.n_customers = std::stoi(val);
      else if (key == "radius") p.radius = std::stod(val);
      else if (key == "covfrac") p.coverage_fraction = std::stod(val);
      else if (key == "devfrac") p.dev_fraction = std::stod(val);
      else if (key == "a") p.costs.a = std::stod(val);
      else if (key == "b") p.costs.b = std::stod(val);
      else throw UsageError("unknown --generate key '" + key + "'");
    } catch (const std::logic_error&) {
      throw UsageError("bad value for --generate key '" + key + "'");
    }
  }
  return p;
}

NamedInstance make_instance(const std::string& path, const std::string& gen) {
  if (!path.empty()) return {fs::path(path).stem().string(), load(path)};
  const auto p = parse_generate(gen);
  return {fmt::format("g{}-{}x{}", p.seed, p.n_facilities, p.n_customers), generate(p)};
}

int parse_gamma(const std::string& text, int num_customers) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text.back() == '%') {
      const double pct = std::stod(text.substr(0, text.size() - 1), &used);
      if (used != text.size() - 1 || pct < 0 || pct > 100) throw UsageError("");
      return static_cast<int>(std::lround(pct / 100.0 * num_customers));
    }
    const int g = std::stoi(text, &used);
    if (used != text.size() || g < 0 || g > num_customers) throw UsageError("");
    return g;
  } catch (const std::exception&) {
    throw UsageError(fmt::format("--gamma must be an integer in [0, {}] or a percentage like 50%", num_customers));
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_for(const std::string& status) {
  if (status == "Optimal") return kExitOk;
  if (status == "TimeLimit") return kExitTimeLimit;
  return kExitError;
}

const std::vector<std::string> kMethods{"miqp", "misocp", "st-ben", "steps-ben", "mt-ben", "mteps-ben"};
const std::vector<std::string> kModes{"both", "load", "coverage", "det"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust congested partial set covering location solver"};
  app.require_subcommand(1);

  std::string instance_path, gen_spec, out_dir, gamma_text = "0", method = "misocp", mode = "both";
  double time_limit = 900.0, mip_gap = 0.0, eps = 1e-8;
  int jobs = 1;
  bool dump_cuts = false;

  auto* gen = app.add_subcommand("generate", "Write a generated instance as JSON");
  gen->add_option("--generate", gen_spec, "seed=..,nf=..,nc=..,radius=..,covfrac=..")->required();
  gen->add_option("--out", out_dir, "Output file")->required();

  auto add_source = [&](CLI::App* sub) {
    auto* i = sub->add_option("--instance", instance_path, "Instance JSON file");
    auto* g = sub->add_option("--generate", gen_spec, "seed=..,nf=..,nc=..,radius=..,covfrac=..");
    i->excludes(g);
    g->excludes(i);
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--time-limit", time_limit, "Seconds per solve")->check(CLI::PositiveNumber);
    sub->add_option("--mip-gap", mip_gap, "Relative gap")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--eps", eps, "Perturbation size")->check(CLI::PositiveNumber);
  };

  auto* solve = app.add_subcommand("solve", "Solve one instance");
  add_source(solve);
  add_solver(solve);
  solve->add_option("--method", method)->check(CLI::IsMember(kMethods));
  solve->add_option("--gamma", gamma_text, "Budget as a count or a percentage of |J|");
  solve->add_option("--mode", mode)->check(CLI::IsMember(kModes));
  solve->add_option("--out", out_dir, "Directory for metrics.csv and report.json");
  solve->add_flag("--cuts", dump_cuts, "Also write the Benders cuts to cuts.json");

  std::vector<std::string> sweep_instances, sweep_gens, sweep_methods{"misocp"}, sweep_modes{"both", "load", "coverage"};
  std::vector<double> grid;
  auto* sweep = app.add_subcommand("sweep", "Budget sweep over modes and methods");
  sweep->add_option("--instance", sweep_instances, "Instance JSON files");
  sweep->add_option("--generate", sweep_gens, "Generator specs");
  sweep->add_option("--method", sweep_methods)->delimiter(',')->check(CLI::IsMember(kMethods));
  sweep->add_option("--mode", sweep_modes)->delimiter(',')->check(CLI::IsMember(kModes));
  sweep->add_option("--grid", grid, "Budget percentages of |J|")->delimiter(',')->check(CLI::Range(0.0, 100.0));
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory")->required();
  add_solver(sweep);

  std::vector<std::string> csvs;
  auto* profile = app.add_subcommand("profile", "Fraction of runs solved over time");
  profile->add_option("csv", csvs, "Metric CSV files")->required();
  profile->add_option("--out", out_dir, "Output CSV (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  mip::SolverParams params;
  params.time_limit = time_limit;
  params.mip_gap = mip_gap;
  params.epsilon = eps;

  try {
    if (*gen) {
      const auto ni = make_instance("", gen_spec);
      if (fs::path(out_dir).has_parent_path()) fs::create_directories(fs::path(out_dir).parent_path());
      save(ni.instance, out_dir);
      return kExitOk;
    }

    if (*solve) {
      if (instance_path.empty() && gen_spec.empty()) throw UsageError("one of --instance or --generate is required");
      const auto ni = make_instance(instance_path, gen_spec);
      const RobustConfig cfg{parse_gamma(gamma_text, ni.instance.num_customers()), parse_mode(mode)};
      const auto res = run_method(ni.instance, ni.id, cfg, parse_method(method), params, dump_cuts);
      std::cout << to_csv({res.row});
      if (!out_dir.empty()) {
        write_file(fs::path(out_dir) / "metrics.csv", to_csv({res.row}));
        nlohmann::json rep = nlohmann::json::parse(mip::to_json(res.report));
        rep["metrics"] = nlohmann::json::parse(to_json({res.row}))[0];
        rep["y"] = res.y;
        rep["v"] = res.v;
        write_file(fs::path(out_dir) / "report.json", rep.dump(2) + "\n");
        if (dump_cuts) write_file(fs::path(out_dir) / "cuts.json", benders::cuts_to_json(res.audit.cuts) + "\n");
      }
      return exit_for(res.row.status);
    }

    if (*sweep) {
      SweepSpec spec;
      for (const auto& p : sweep_instances) spec.instances.push_back(make_instance(p, ""));
      for (const auto& g : sweep_gens) spec.instances.push_back(make_instance("", g));
      if (spec.instances.empty()) throw UsageError("sweep needs at least one --instance or --generate");
      spec.methods.clear();
      for (const auto& m : sweep_methods) spec.methods.push_back(parse_method(m));
      spec.modes.clear();
      for (const auto& m : sweep_modes) spec.modes.push_back(parse_mode(m));
      if (!grid.empty()) spec.percents = grid;
      spec.params = params;
      spec.jobs = jobs;
      const auto rows = run_sweep(spec);
      const fs::path out(out_dir);
      write_file(out / "metrics.csv", to_csv(rows));
      write_file(out / "metrics.json", to_json(rows) + "\n");
      write_file(out / "gamma_star.csv", to_csv(gamma_stars(rows)));
      int code = kExitOk;
      for (const auto& r : rows) {
        const int c = exit_for(r.status);
        if (c == kExitError) return kExitError;
        code = std::max(code, c);
      }
      return code;
    }

    if (*profile) {
      std::vector<MetricsRow> rows;
      for (const auto& p : csvs) {
        auto part = parse_csv(read_file(p));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (rows.empty()) throw UsageError("no metric rows in the given files");
      const auto text = profile_csv(solution_profile(rows));
      if (out_dir.empty())
        std::cout << text;
      else
        write_file(out_dir, text);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
