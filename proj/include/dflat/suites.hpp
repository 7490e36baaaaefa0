#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "dflat/catalog.hpp"
#include "dflat/phi.hpp"

namespace dflat {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
  std::string command = "verify";
  std::string case_id = "funk";
  int dim = 3;
  std::optional<int> samples;   // suite default when unset
  std::optional<double> tol;    // suite default when unset
  std::uint64_t seed = 42;
  std::optional<double> mu;
  std::optional<double> lambda;
  std::optional<double> kappa;
  std::optional<double> eps;
  std::optional<double> k1;
  std::optional<double> k2;
  std::optional<double> k3;
  int sign = 1;
  std::string method = "auto";
  int grid = 50;
  std::string output;
  std::string format = "json";

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
};

struct CheckRecord {
  std::string name;
  std::string anchor;  // the claim under test
  double max_residual = 0.0;
  double mean_residual = 0.0;
  int samples = 0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

// Accumulates residuals of one check.
class CheckBuilder {
 public:
  CheckBuilder(std::string name, std::string anchor, double tolerance);
  void add(double residual);
  void note(const std::string& text);
  // pass = samples > 0, all finite, max < tolerance.
  CheckRecord finish() const;
  // pass = samples > 0 and max > tolerance (residual must be large).
  CheckRecord finish_expect_large() const;

 private:
  CheckRecord rec_;
  double sum_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  bool finite_ = true;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckRecord> checks;
  nlohmann::json config;
  bool pass() const;
  nlohmann::json to_json() const;
};

// Per-check random substream: seed mixed with a fixed offset.
std::uint64_t substream(std::uint64_t seed, std::uint64_t offset);

// Random constants whose invariant triple falls in the requested branch.
KParams random_k_in_class(FCase branch, std::mt19937_64& rng);

// Suites addressable by catalog id. Throws ConfigError on unknown ids.
SuiteReport run_suite(const RunConfig& cfg);

// Individual suites (defaults follow the acceptance settings).
SuiteReport suite_funk(const RunConfig& cfg);
SuiteReport suite_randers_family(const RunConfig& cfg);
SuiteReport suite_navigation(const RunConfig& cfg);
SuiteReport suite_flat_alpha(const RunConfig& cfg);
SuiteReport suite_related_beta(const RunConfig& cfg);
SuiteReport suite_example(const RunConfig& cfg);
SuiteReport suite_family_kappa(const RunConfig& cfg);
SuiteReport suite_negative_control(const RunConfig& cfg);
SuiteReport suite_deformation_stages(const RunConfig& cfg);
SuiteReport suite_ode(const RunConfig& cfg);
SuiteReport suite_group(const RunConfig& cfg);
SuiteReport suite_eta(const RunConfig& cfg);
SuiteReport suite_reversibility(const RunConfig& cfg);
SuiteReport suite_engine(const RunConfig& cfg);

// Closed-form eta against quadrature per case.
struct EtaRow {
  int which = 0;
  std::string form;  // "closed" or "literal"
  std::string params;
  int points = 0;
  double max_deviation = 0.0;
  bool flagged = false;
};
std::vector<EtaRow> eta_table(double threshold = 1e-6);

// phi table rows (s, phi, phi', phi'', residual).
struct PhiRow {
  double s, value, d1, d2, residual;
};
struct PhiTable {
  std::string method;
  std::string label;
  Interval domain;
  std::vector<PhiRow> rows;
};
PhiTable phi_table(const KParams& k, const std::string& method, int count);

}  // namespace dflat
