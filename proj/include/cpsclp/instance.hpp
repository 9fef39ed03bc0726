#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpsclp {

struct FacilityData {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double open_cost = 0.0;  // f_i
  double a = 0.0;          // quadratic congestion coefficient
  double b = 0.0;          // linear congestion coefficient
};

struct CustomerData {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double demand = 0.0;     // nominal d_j
  double deviation = 0.0;  // d_hat_j
};

struct GeneratorMeta {
  std::uint64_t seed = 0;
  std::string generator = "manual";
};

/// CPSCLP data. Coverage sets are derived from coordinates and radius and are
/// rebuilt by `rebuild_coverage()`; they are never serialized.
class Instance {
 public:
  Instance() = default;
  Instance(std::vector<FacilityData> facilities, std::vector<CustomerData> customers,
           double radius, double target_demand, GeneratorMeta meta = {});

  const std::vector<FacilityData>& facilities() const { return facilities_; }
  const std::vector<CustomerData>& customers() const { return customers_; }
  double radius() const { return radius_; }
  double target_demand() const { return target_demand_; }
  const GeneratorMeta& meta() const { return meta_; }

  int num_facilities() const { return static_cast<int>(facilities_.size()); }
  int num_customers() const { return static_cast<int>(customers_.size()); }

  /// I(j): facilities able to cover customer j, ascending.
  const std::vector<int>& covering(int customer) const { return covering_[customer]; }
  /// J(i): customers facility i can cover, ascending.
  const std::vector<int>& covered_by(int facility) const { return covered_by_[facility]; }

  double total_demand() const;
  /// Sum of d_j over customers with a non-empty I(j).
  double coverable_demand() const;
  /// V_i = sum over J(i) of (d_j + d_hat_j); an upper bound on any load of facility i.
  double load_cap(int facility) const;

  /// Raw coverage maps; exposed so validation can be exercised on hand-built
  /// (possibly inconsistent) data.
  const std::vector<std::vector<int>>& covering_sets() const { return covering_; }
  const std::vector<std::vector<int>>& covered_by_sets() const { return covered_by_; }
  std::vector<std::vector<int>>& mutable_covering() { return covering_; }
  std::vector<std::vector<int>>& mutable_covered_by() { return covered_by_; }

  void rebuild_coverage();

  friend bool operator==(const Instance& lhs, const Instance& rhs);

 private:
  std::vector<FacilityData> facilities_;
  std::vector<CustomerData> customers_;
  double radius_ = 0.0;
  double target_demand_ = 0.0;
  GeneratorMeta meta_;
  std::vector<std::vector<int>> covering_;
  std::vector<std::vector<int>> covered_by_;
};

enum class UncertaintyMode { Both, LoadOnly, CoverageOnly, Deterministic };

struct RobustConfig {
  int gamma = 0;
  UncertaintyMode mode = UncertaintyMode::Both;

  bool protects_load() const {
    return mode == UncertaintyMode::Both || mode == UncertaintyMode::LoadOnly;
  }
  bool protects_coverage() const {
    return mode == UncertaintyMode::Both || mode == UncertaintyMode::CoverageOnly;
  }
};

std::string to_string(UncertaintyMode mode);
/// Accepts the CLI spellings {both, load, coverage, det} as well as the enum names.
UncertaintyMode parse_mode(const std::string& text);

/// Throws std::invalid_argument when gamma is outside [0, |J|].
void check_config(const Instance& instance, const RobustConfig& config);

struct CostParams {
  double a = 0.01;
  double b = 1.0;
  int open_cost_min = 200;
  int open_cost_max = 500;
};

struct GeneratorParams {
  std::uint64_t seed = 1;
  int n_facilities = 10;
  int n_customers = 50;
  double radius = 10.0;
  double coverage_fraction = 0.5;
  double dev_fraction = 0.20;
  CostParams costs;
};

/// No opening set can reach the target demand.
class StructurallyInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by `load` for schema problems; the message names the field.
class InstanceParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by `load` when the parsed data violates an invariant.
class InstanceValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random instance. Coordinates uniform on [0,30]^2, integer
/// demands on [1,100], integer deviations on [0, floor(dev_fraction * d_j)],
/// D = ceil(coverage_fraction * sum d). Uses std::mt19937_64 with
/// hand-rolled distribution mappings so output is identical on every platform.
Instance generate(const GeneratorParams& params);

struct Violation {
  std::string field;
  int index = -1;
  int other = -1;
  std::string rule;
};

std::vector<Violation> validate(const Instance& instance);
std::string describe(const Violation& violation);

void save(const Instance& instance, const std::filesystem::path& path);
Instance load(const std::filesystem::path& path);

std::string to_json_string(const Instance& instance);
Instance from_json_string(const std::string& text);

}  // namespace cpsclp
