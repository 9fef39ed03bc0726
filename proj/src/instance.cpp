#include "cpsclp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

namespace cpsclp {

namespace {

constexpr const char* kGeneratorVersion = "cpsclp-gen/1 (mt19937_64)";
constexpr double kBoxSide = 30.0;

bool within_radius(double fx, double fy, double cx, double cy, double radius) {
  const double dx = fx - cx;
  const double dy = fy - cy;
  return dx * dx + dy * dy <= radius * radius;
}

// Distribution mappings are written out instead of using <random>'s
// distributions, whose output is implementation-defined.
double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1u;
  if (span == 0) return lo + static_cast<std::int64_t>(rng());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return lo + static_cast<std::int64_t>(draw % span);
}

bool finite_nonneg(double value) { return std::isfinite(value) && value >= 0.0; }

}  // namespace

Instance::Instance(std::vector<FacilityData> facilities, std::vector<CustomerData> customers,
                   double radius, double target_demand, GeneratorMeta meta)
    : facilities_(std::move(facilities)),
      customers_(std::move(customers)),
      radius_(radius),
      target_demand_(target_demand),
      meta_(std::move(meta)) {
  rebuild_coverage();
}

void Instance::rebuild_coverage() {
  covering_.assign(customers_.size(), {});
  covered_by_.assign(facilities_.size(), {});
  for (std::size_t j = 0; j < customers_.size(); ++j) {
    for (std::size_t i = 0; i < facilities_.size(); ++i) {
      if (within_radius(facilities_[i].x, facilities_[i].y, customers_[j].x, customers_[j].y,
                        radius_)) {
        covering_[j].push_back(static_cast<int>(i));
        covered_by_[i].push_back(static_cast<int>(j));
      }
    }
  }
}

double Instance::total_demand() const {
  double total = 0.0;
  for (const auto& c : customers_) total += c.demand;
  return total;
}

double Instance::coverable_demand() const {
  double total = 0.0;
  for (std::size_t j = 0; j < customers_.size(); ++j)
    if (!covering_[j].empty()) total += customers_[j].demand;
  return total;
}

double Instance::load_cap(int facility) const {
  double cap = 0.0;
  for (int j : covered_by_[facility]) cap += customers_[j].demand + customers_[j].deviation;
  return cap;
}

bool operator==(const Instance& lhs, const Instance& rhs) {
  auto fac_eq = [](const FacilityData& a, const FacilityData& b) {
    return a.id == b.id && a.x == b.x && a.y == b.y && a.open_cost == b.open_cost &&
           a.a == b.a && a.b == b.b;
  };
  auto cus_eq = [](const CustomerData& a, const CustomerData& b) {
    return a.id == b.id && a.x == b.x && a.y == b.y && a.demand == b.demand &&
           a.deviation == b.deviation;
  };
  return lhs.radius_ == rhs.radius_ && lhs.target_demand_ == rhs.target_demand_ &&
         lhs.meta_.seed == rhs.meta_.seed && lhs.meta_.generator == rhs.meta_.generator &&
         std::equal(lhs.facilities_.begin(), lhs.facilities_.end(), rhs.facilities_.begin(),
                    rhs.facilities_.end(), fac_eq) &&
         std::equal(lhs.customers_.begin(), lhs.customers_.end(), rhs.customers_.begin(),
                    rhs.customers_.end(), cus_eq) &&
         lhs.covering_ == rhs.covering_ && lhs.covered_by_ == rhs.covered_by_;
}

std::string to_string(UncertaintyMode mode) {
  switch (mode) {
    case UncertaintyMode::Both: return "both";
    case UncertaintyMode::LoadOnly: return "load";
    case UncertaintyMode::CoverageOnly: return "coverage";
    case UncertaintyMode::Deterministic: return "det";
  }
  return "?";
}

UncertaintyMode parse_mode(const std::string& text) {
  if (text == "both" || text == "Both") return UncertaintyMode::Both;
  if (text == "load" || text == "LoadOnly") return UncertaintyMode::LoadOnly;
  if (text == "coverage" || text == "CoverageOnly") return UncertaintyMode::CoverageOnly;
  if (text == "det" || text == "Deterministic") return UncertaintyMode::Deterministic;
  throw std::invalid_argument("unknown uncertainty mode '" + text + "'");
}

void check_config(const Instance& instance, const RobustConfig& config) {
  if (config.gamma < 0 || config.gamma > instance.num_customers())
    throw std::invalid_argument(fmt::format("gamma {} outside [0, {}]", config.gamma,
                                            instance.num_customers()));
}

Instance generate(const GeneratorParams& p) {
  if (!(p.coverage_fraction > 0.0 && p.coverage_fraction <= 1.0))
    throw std::invalid_argument("coverage_fraction must lie in (0, 1]");
  if (p.n_facilities < 1 || p.n_customers < 1)
    throw std::invalid_argument("facility and customer counts must be at least 1");
  if (!(p.dev_fraction >= 0.0) || !(p.radius >= 0.0))
    throw std::invalid_argument("dev_fraction and radius must be non-negative");
  if (p.costs.open_cost_min > p.costs.open_cost_max)
    throw std::invalid_argument("open cost range is empty");

  std::mt19937_64 rng(p.seed);
  std::vector<CustomerData> customers(p.n_customers);
  for (int j = 0; j < p.n_customers; ++j) {
    auto& c = customers[j];
    c.id = j;
    c.x = uniform_real(rng, 0.0, kBoxSide);
    c.y = uniform_real(rng, 0.0, kBoxSide);
    c.demand = static_cast<double>(uniform_int(rng, 1, 100));
    const auto max_dev = static_cast<std::int64_t>(std::floor(p.dev_fraction * c.demand));
    c.deviation = static_cast<double>(
        std::min<std::int64_t>(uniform_int(rng, 0, max_dev), static_cast<std::int64_t>(c.demand)));
  }
  std::vector<FacilityData> facilities(p.n_facilities);
  for (int i = 0; i < p.n_facilities; ++i) {
    auto& f = facilities[i];
    f.id = i;
    f.x = uniform_real(rng, 0.0, kBoxSide);
    f.y = uniform_real(rng, 0.0, kBoxSide);
    f.open_cost =
        static_cast<double>(uniform_int(rng, p.costs.open_cost_min, p.costs.open_cost_max));
    f.a = p.costs.a;
    f.b = p.costs.b;
  }
  double total = 0.0;
  for (const auto& c : customers) total += c.demand;
  const double target = std::ceil(p.coverage_fraction * total);

  Instance instance(std::move(facilities), std::move(customers), p.radius, target,
                    GeneratorMeta{p.seed, kGeneratorVersion});
  if (instance.coverable_demand() < target)
    throw StructurallyInfeasible(fmt::format(
        "structurally infeasible: coverable demand {} below target {}",
        instance.coverable_demand(), target));
  return instance;
}

std::vector<Violation> validate(const Instance& inst) {
  std::vector<Violation> out;
  const int nf = inst.num_facilities();
  const int nc = inst.num_customers();
  if (!(inst.radius() >= 0.0) || !std::isfinite(inst.radius()))
    out.push_back({"radius", -1, -1, "must be finite and non-negative"});
  for (int i = 0; i < nf; ++i) {
    const auto& f = inst.facilities()[i];
    if (!finite_nonneg(f.open_cost)) out.push_back({"facilities.f", i, -1, "finite, >= 0"});
    if (!finite_nonneg(f.a)) out.push_back({"facilities.a", i, -1, "finite, >= 0"});
    if (!finite_nonneg(f.b)) out.push_back({"facilities.b", i, -1, "finite, >= 0"});
    if (!std::isfinite(f.x) || !std::isfinite(f.y))
      out.push_back({"facilities.xy", i, -1, "finite coordinates"});
  }
  for (int j = 0; j < nc; ++j) {
    const auto& c = inst.customers()[j];
    if (!finite_nonneg(c.demand)) out.push_back({"customers.d", j, -1, "finite, >= 0"});
    if (!finite_nonneg(c.deviation)) out.push_back({"customers.d_hat", j, -1, "finite, >= 0"});
    if (c.deviation > c.demand) out.push_back({"customers.d_hat", j, -1, "d_hat <= d"});
    if (!std::isfinite(c.x) || !std::isfinite(c.y))
      out.push_back({"customers.xy", j, -1, "finite coordinates"});
  }
  const double total = inst.total_demand();
  if (!(inst.target_demand() > 0.0) || !(inst.target_demand() <= total))
    out.push_back({"target_demand", -1, -1, "0 < D <= sum of demands"});

  const auto& covering = inst.covering_sets();
  const auto& covered_by = inst.covered_by_sets();
  if (static_cast<int>(covering.size()) != nc || static_cast<int>(covered_by.size()) != nf) {
    out.push_back({"coverage", -1, -1, "coverage maps sized to |J| and |I|"});
    return out;
  }
  auto contains = [](const std::vector<int>& set, int value) {
    return std::find(set.begin(), set.end(), value) != set.end();
  };
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < nf; ++i) {
      const bool in_i = contains(covering[j], i);
      const bool in_j = contains(covered_by[i], j);
      const auto& f = inst.facilities()[i];
      const auto& c = inst.customers()[j];
      const bool geo = within_radius(f.x, f.y, c.x, c.y, inst.radius());
      if (in_i != in_j)
        out.push_back({"coverage", i, j, "i in I(j) iff j in J(i)"});
      else if (in_i != geo)
        out.push_back({"coverage", i, j, "membership iff distance <= R"});
    }
  }
  return out;
}

std::string describe(const Violation& v) {
  if (v.other >= 0) return fmt::format("{}[{},{}]: {}", v.field, v.index, v.other, v.rule);
  if (v.index >= 0) return fmt::format("{}[{}]: {}", v.field, v.index, v.rule);
  return fmt::format("{}: {}", v.field, v.rule);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw InstanceParseError(fmt::format("missing field '{}{}'", where, key));
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const auto& node = require(obj, key, where);
  if (!node.is_number()) throw InstanceParseError(fmt::format("field '{}{}' is not a number", where, key));
  return node.get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const auto& node = require(obj, key, where);
  if (!node.is_number_integer())
    throw InstanceParseError(fmt::format("field '{}{}' is not an integer", where, key));
  return node.get<int>();
}

}  // namespace

std::string to_json_string(const Instance& inst) {
  json doc;
  doc["meta"] = {{"seed", inst.meta().seed}, {"generator", inst.meta().generator}};
  json facs = json::array();
  for (const auto& f : inst.facilities())
    facs.push_back({{"id", f.id}, {"x", f.x}, {"y", f.y}, {"f", f.open_cost}, {"a", f.a}, {"b", f.b}});
  json cus = json::array();
  for (const auto& c : inst.customers())
    cus.push_back({{"id", c.id}, {"x", c.x}, {"y", c.y}, {"d", c.demand}, {"d_hat", c.deviation}});
  doc["facilities"] = std::move(facs);
  doc["customers"] = std::move(cus);
  doc["radius"] = inst.radius();
  doc["target_demand"] = inst.target_demand();
  return doc.dump(1);
}

Instance from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InstanceParseError(std::string("malformed JSON: ") + e.what());
  }
  GeneratorMeta meta;
  if (doc.contains("meta")) {
    const auto& m = doc.at("meta");
    if (m.contains("seed")) {
      if (!m.at("seed").is_number_unsigned() && !m.at("seed").is_number_integer())
        throw InstanceParseError("field 'meta.seed' is not an integer");
      meta.seed = m.at("seed").get<std::uint64_t>();
    }
    if (m.contains("generator")) meta.generator = m.at("generator").get<std::string>();
  }
  const auto& facs = require(doc, "facilities", "");
  const auto& cus = require(doc, "customers", "");
  if (!facs.is_array()) throw InstanceParseError("field 'facilities' is not an array");
  if (!cus.is_array()) throw InstanceParseError("field 'customers' is not an array");

  std::vector<FacilityData> facilities;
  for (std::size_t k = 0; k < facs.size(); ++k) {
    const auto where = fmt::format("facilities[{}].", k);
    const auto& node = facs[k];
    facilities.push_back({integer(node, "id", where), number(node, "x", where),
                          number(node, "y", where), number(node, "f", where),
                          number(node, "a", where), number(node, "b", where)});
  }
  std::vector<CustomerData> customers;
  for (std::size_t k = 0; k < cus.size(); ++k) {
    const auto where = fmt::format("customers[{}].", k);
    const auto& node = cus[k];
    customers.push_back({integer(node, "id", where), number(node, "x", where),
                         number(node, "y", where), number(node, "d", where),
                         number(node, "d_hat", where)});
  }
  const double radius = number(doc, "radius", "");
  const double target = number(doc, "target_demand", "");

  Instance inst(std::move(facilities), std::move(customers), radius, target, meta);
  const auto violations = validate(inst);
  if (!violations.empty()) {
    std::string msg = "instance validation failed:";
    for (const auto& v : violations) msg += " " + describe(v) + ";";
    throw InstanceValidationError(msg);
  }
  return inst;
}

void save(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json_string(instance) << '\n';
}

Instance load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

}  // namespace cpsclp
