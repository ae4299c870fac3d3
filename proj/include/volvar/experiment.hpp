#pragma once

#include "volvar/brakke.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace volvar {

/// Malformed or incomplete configuration (CLI exit status 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind {
  curvature_convergence,
  discretization_stability,
  brakke_residual,
  distance_check,
  ahlfors_scan,
  constants_ledger,
};

const char* to_string(ExperimentKind kind);

/// Parsed INI configuration. Every key is listed in the README; unknown keys
/// are rejected so typos do not silently fall back to defaults.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::curvature_convergence;
  std::uint64_t seed = 1;
  std::string output;

  std::string shape_name = "circle";
  std::map<std::string, double> shape_params;

  std::string kernel_name = "natural";
  int kernel_exponent = 4;

  std::vector<double> epsilons;
  /// Mesh diameters h.
  std::vector<double> h_values;
  /// Mesh edge lengths (mass bookkeeping table).
  std::vector<double> edges;
  /// Mesh diameters of the stability sweep at fixed eps.
  std::vector<double> stability_h;
  /// h = eps^p when set.
  std::optional<double> coupling_power;
  /// Mesh box half width around the shape center.
  std::optional<double> half_width;

  int resolution = 4096;
  int probes = 32;
  int samples_per_cell = 32;

  double t1 = 0.0;
  double t2 = 0.125;
  int nt = 64;
  ResidualMode mode = ResidualMode::discrete;
  bool enforce_gamma = true;
  bool control = true;
  std::optional<std::vector<double>> phi_center;
  std::optional<double> phi_inner;
  std::optional<double> phi_outer;
  double phi_height = 1.0;

  std::optional<double> c0, c1, c2, lambda_max, mass0, phi_c1;
  double horizon = 0.125;
  std::vector<double> c1_epsilons{0.4, 0.2, 0.1, 0.05};

  std::vector<double> radii{0.1, 0.25, 0.5, 1.0};
  int ahlfors_probes = 16;

  int atoms = 500;
  int test_functions = 20;

  /// Canonical INI text of the effective configuration (after overrides).
  std::string canonical;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Replaces the seed and refreshes the canonical text.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

struct Diagnostic {
  /// Fatal diagnostics stop a run (exit status 3).
  bool fatal = true;
  std::string message;
};

/// Precondition checks without running: 2h <= gamma eps, and a mesh box
/// holding the eps-neighborhood of the shape.
std::vector<Diagnostic> validate(const ExperimentConfig& config);

struct ExperimentOutcome {
  bool passed = true;
  std::vector<std::string> checks;  ///< "[PASS] ..." / "[FAIL] ..." lines
  std::vector<std::string> files;   ///< written files, relative to the output directory
};

/// Runs the experiment and writes CSV tables, summary.txt, config.ini and
/// manifest.txt into `out_dir` (created if needed). Throws ConfigError,
/// PreconditionViolated, DenominatorTooSmall or NumericalFailure.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

/// 0 on success; 2 configuration, 3 precondition, 4 numerical failure, 1 other.
int exit_status_for(const std::exception& e);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace volvar
