#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aflab/torus_field.hpp"

namespace aflab {

/// Every tolerance a pipeline checks against; echoed in summary.json.
struct Tolerances {
  double kernel = 1e-8;        // relative A-residual of inputs and minimisers
  double minimality = 1e-8;    // I(u~) - I(u) >= -tol (1 + |I(u)|)
  double pi_identity = 1e-8;   // mean-value identity of the quasiaffine form
  double objective = 1e-8;     // thm3: descent must reach I <= objective
  double minimise = 1e-6;      // projected-gradient stopping rule
  double decay = 1e-9;         // relative slack in shell and majorant checks
};

struct LambdaGrid {
  double start = 0.0;  // 0: chosen from the data
  double ratio = 0.0;
  int count = 0;
};

struct ExperimentConfig {
  std::string pipeline;  // tp-verify, thm1, thm3, domain, holefill-only
  std::string op;        // builtin name or operator JSON file
  std::string integrand; // builtin name or integrand JSON file
  int dim = 2;
  int resolution = 32;
  LambdaGrid lambda_grid;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "aflab_out";
  std::vector<double> mean;  // empty: pipeline default
  int max_iterations = 2000;
  std::string field;      // tp-verify / holefill-only input: builtin name or field file
  std::string potential;  // gradient or stream2d; empty: from the operator
  double p = 2.0;         // holefill-only
  double R = 2.0;         // holefill-only
  double eps_fraction = 0.5;
  Tolerances tolerances;
};

/// Parses and validates a config. Relative file references are resolved against
/// `base_dir`. AFLAB_OUTPUT_DIR, when set, replaces output_dir.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

enum class SuiteStatus { pass, fail, skipped };
std::string to_string(SuiteStatus s);

struct SuiteResult {
  std::string name;
  SuiteStatus status = SuiteStatus::skipped;
  std::string reason;
};

struct RunOutcome {
  std::vector<SuiteResult> suites;
  std::filesystem::path bundle;
  int exit_code = 0;  // 0 all pass, 1 some suite failed
};

/// Runs one pipeline and writes its bundle (fields, CSV tables, JSON reports and
/// summary.json) into config.output_dir. Configuration problems throw LabError.
RunOutcome run(const ExperimentConfig& config);

/// Turns a bundle into whitespace-separated plot files in `out_dir`; returns the
/// files written. Throws LabError(io_error) when the bundle is missing.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& bundle,
                                                 const std::filesystem::path& out_dir);

// Synthetic inputs shared by the pipelines, the tests and the benchmarks.

/// 1D, N = 10: |u| = 1 on nine cells and 4 on one.
Field two_plateau_field();
/// Gradient of 0.1 log(rho^2 + delta^2), rho the periodic distance to the centre.
Field concentrating_gradient_field(int resolution, double delta);
/// Gradient of sigma exp(-rho^2 / sigma^2).
Field sharp_peak_gradient_field(int resolution, double sigma = 0.02);
/// Builtin field by name ("zero", "two-plateau", "concentrating", "sharp-peak") or a field file.
Field load_input_field(const std::string& name_or_file, int dim, int resolution);

/// lambda levels between the upper quartile of Mu and 0.9 max Mu.
std::vector<double> upper_level_grid(std::span<const double> maximal_values, int count);

}  // namespace aflab
