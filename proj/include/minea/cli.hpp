#pragma once

// Experiment runner behind the minea-ergo executable.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
// 4 verification failure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "minea/minea_core.hpp"
#include "minea/spectral_nse.hpp"

namespace minea::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowUp = 3;
inline constexpr int kExitVerification = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimSection {
  double t_end = 100.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::exp;
  std::uint64_t seed = 1;
  std::size_t n_traj = 500;
  double burn_in_frac = 0.5;
  std::uint64_t record_stride = 100;
};

struct NseSection {
  nse::NseParams params;
  int identity_instances = 100;
  double initial_amplitude = 1.0;
  double consistency_t_end = 10.0;
  std::size_t convergence_n_traj = 20;
  double convergence_t_end = 50.0;
  double convergence_dt = 1e-2;
  bool inject_fault = false;
};

struct ScanSection {
  std::vector<double> kappa;
  std::vector<double> sigma;
};

struct OuSection {
  std::size_t n = 100000;
  double horizon = 1.0;
  std::size_t steps = 10;
};

struct ExperimentConfig {
  std::optional<MineaParams> system;
  std::optional<NseSection> nse;
  SimSection sim;
  State3 initial_state{0.0, 1.0, 0.0};
  std::optional<ScanSection> scan;
  OuSection ou;
  std::string output = "minea_";
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool expect_separation = false;
};

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_stationary_points(const ExperimentConfig& cfg, std::ostream& log);
int cmd_phase_scan(const ExperimentConfig& cfg, std::ostream& log);
int cmd_dual_basin(const ExperimentConfig& cfg, bool expect_separation, std::ostream& log);
int cmd_nse_verify(const ExperimentConfig& cfg, std::ostream& log);
int cmd_ou_check(const ExperimentConfig& cfg, std::ostream& log);

/// Full command line: `minea-ergo <command> --config FILE [--seed S] [--out PREFIX]
/// [--expect-separation]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// %.17g formatting; NaN prints as "nan".
std::string format_double(double x);

}  // namespace minea::cli
