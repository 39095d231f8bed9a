#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qlnf/kg.hpp"
#include "qlnf/normal_form.hpp"
#include "qlnf/nls.hpp"

namespace qlnf {

using json = nlohmann::json;

// Bad key, type or value in a configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string model = "nls";
  int d = 1, K = 32;
  double s = 10.0;
  double eps = kDefaultCutoffEps;  // paraproduct cutoff
  std::vector<double> epsilon_list{0.1, 0.07, 0.05};
  std::uint64_t seed = 1;
  double dt = 0.0;  // 0 selects 0.5 / Lambda_max
  double t_max = 1.0;
  int N_threshold = 8;
  bool semilinear = false;
  struct Potential {
    std::uint64_t seed = 1;
    int m = 2;
    bool enabled = false;
  } potential;
  double mass = 1.5;
  std::string h_kind = "tau_squared";
  json F_spec = "default";  // "default", "none" or a list of {coef, e}
  std::array<double, 5> G_spec{0.0, 0.0, 1.0, 0.0, 0.0};
  std::string output_dir = "out";

  // Keys beyond the base schema.
  double epsilon = 0.05;   // amplitude for simulate-*
  int snapshot_every = 0;  // steps between stored snapshots, 0 = none
  bool nonlinear = true;
  double kappa = 0.05;     // mass-measure half width
  long samples = 10000;    // mass-measure draws
};

// Unknown keys and ill-typed values throw ConfigError.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& cfg);
// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const ExperimentConfig& cfg);
// "# config_hash=... seed=...\n# config=...\n"
std::string header_comment(const ExperimentConfig& cfg);

NlsConfig nls_config(const ExperimentConfig& cfg);
KgConfig kg_config(const ExperimentConfig& cfg);

// Size limits checked before any run or write.
void check_caps(const ExperimentConfig& cfg, const std::string& command);

json field_to_json(const FourierField& f);
FourierField field_from_json(const json& j, const FrequencyLattice& lat);

struct SimulationResult {
  std::string csv;   // t, hamiltonian, mass, hs_norm
  json trajectory;   // snapshots of the plus component
  long steps = 0;
};
SimulationResult simulate(const ExperimentConfig& cfg);

// Energy ledger of a stored trajectory; cfg must match the trajectory's hash.
EnergyLedger ledger_from_trajectory(const json& trajectory, const ExperimentConfig& cfg);

struct RunRecord {
  double epsilon = 0.0;
  double T_star = 0.0;
  double max_norm_ratio = 0.0;  // largest ||u(t)||_{H^s} / ||u(0)||_{H^s} seen
  bool reached_threshold = false;
  bool failed = false;
  std::string error;
  double wall_time = 0.0;  // seconds; kept out of the CSV
  std::uint64_t seed = 0;
  std::string config_hash;
};

// T* = first step time with ||u||_{H^s} >= 2 ||u(0)||_{H^s}, t_max if never.
RunRecord lifespan_run(const ExperimentConfig& cfg, double epsilon);
// epsilon_list must be strictly descending with entries in (0, 0.2]; runs go through a worker pool.
std::vector<RunRecord> lifespan_experiment(const ExperimentConfig& cfg);
std::string lifespan_csv(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg);

struct ExponentFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  int points = 0;
};
// Least squares on (log eps, log T*) over the points with T* < t_max; throws
// std::invalid_argument with fewer than three such points.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& pairs, double t_max);

enum class CheckStatus { pass, fail, skipped };
std::string to_string(CheckStatus s);

struct CheckResult {
  int criterion = 0;
  std::string name;
  CheckStatus status = CheckStatus::fail;
  double value = 0.0;
  std::string bound;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  int scan_K_nls = 32;
  int scan_K_kg = 8;
  std::vector<double> kg_masses{1.3, 1.5, 1.7};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8};
};

// Enumeration checks are skipped below this K.
constexpr int kMinScanK = 4;

std::vector<CheckResult> check_identities();
std::vector<CheckResult> check_cancellation();
std::vector<CheckResult> check_superactions();
std::vector<CheckResult> check_sweeps();
std::vector<CheckResult> check_taylor();
std::vector<CheckResult> check_divisors(const VerifyOptions& opt);
std::vector<CheckResult> check_conservation();
std::vector<CheckResult> check_ledger_closure();
std::vector<CheckResult> check_cutoff_smoothness();

// Runs the selected criteria plus the cutoff smoothness check.
std::vector<CheckResult> run_verify(const VerifyOptions& opt);
bool all_pass(const std::vector<CheckResult>& checks);
json checks_to_json(const std::vector<CheckResult>& checks);
std::string checks_table(const std::vector<CheckResult>& checks);

// Writes through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace qlnf
