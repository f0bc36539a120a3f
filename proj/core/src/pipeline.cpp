#include "aflab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "aflab/error.hpp"
#include "aflab/extension.hpp"
#include "aflab/holefill.hpp"
#include "aflab/io.hpp"
#include "aflab/maximal.hpp"
#include "aflab/minimise.hpp"
#include "aflab/truncation.hpp"
#include "json.hpp"

namespace aflab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kPipelines[] = {"tp-verify", "thm1", "thm3", "domain", "holefill-only"};
const char* const kBuiltinFields[] = {"zero", "two-plateau", "concentrating", "sharp-peak"};

[[noreturn]] void config_error(const std::string& msg) {
  throw LabError(ErrorCode::invalid_input, "config: " + msg);
}

bool is_builtin_operator(const std::string& name) {
  try {
    builtin_operator(name);
    return true;
  } catch (const LabError&) {
    return false;
  }
}

bool is_builtin_integrand(const std::string& name) {
  return name == "power" || name == "heterogeneous" || name == "quasiconformal" ||
         name == "plap-coupled";
}

bool is_builtin_field(const std::string& name) {
  return std::find(std::begin(kBuiltinFields), std::end(kBuiltinFields), name) !=
         std::end(kBuiltinFields);
}

// A builtin name stays as is; anything else must be an existing file.
std::string resolve_reference(const std::string& value, bool builtin, const fs::path& base,
                              const char* what) {
  if (value.empty() || builtin) return value;
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  if (!fs::exists(p)) config_error(std::string(what) + " '" + value + "' is neither builtin nor a file");
  return p.string();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("top level must be an object");

  ExperimentConfig c;
  try {
    if (!j.contains("pipeline")) config_error("missing 'pipeline'");
    c.pipeline = j.at("pipeline").get<std::string>();
    if (std::find(std::begin(kPipelines), std::end(kPipelines), c.pipeline) == std::end(kPipelines))
      config_error("unknown pipeline '" + c.pipeline + "'");

    if (c.pipeline == "tp-verify") c.resolution = 64;
    if (c.pipeline == "thm1") c.op = "div2", c.integrand = "heterogeneous", c.mean = {1.0, 0.0};
    if (c.pipeline == "thm3")
      c.op = "curl2x2", c.integrand = "quasiconformal", c.mean = {1.0, -0.5, 0.5, 1.0};
    if (c.pipeline == "domain") c.integrand = "heterogeneous", c.mean = {1.0, 0.0};
    if (c.pipeline == "tp-verify") c.field = "concentrating";
    if (c.pipeline == "holefill-only") c.field = "two-plateau";

    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      c.dim = g.value("dim", c.dim);
      c.resolution = g.value("resolution", c.resolution);
    }
    if (c.dim < 1 || c.dim > TorusGrid::kMaxDim) config_error("grid.dim must be 1, 2 or 3");
    if (c.resolution < 4 || c.resolution % 2 != 0) config_error("grid.resolution must be even and >= 4");

    if (j.contains("lambda_grid")) {
      const auto& l = j.at("lambda_grid");
      c.lambda_grid.start = l.at("start").get<double>();
      c.lambda_grid.ratio = l.at("ratio").get<double>();
      c.lambda_grid.count = l.at("count").get<int>();
      if (!(c.lambda_grid.start > 0.0)) config_error("lambda_grid.start must be positive");
      if (!(c.lambda_grid.ratio > 1.0)) config_error("lambda_grid.ratio must exceed 1");
      if (c.lambda_grid.count < 1) config_error("lambda_grid.count must be positive");
    }

    c.op = j.value("operator", c.op);
    c.integrand = j.value("integrand", c.integrand);
    c.field = j.value("field", c.field);
    c.potential = j.value("potential", c.potential);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.mean = j.value("mean", c.mean);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.p = j.value("p", c.p);
    c.R = j.value("R", c.R);
    c.eps_fraction = j.value("eps_fraction", c.eps_fraction);

    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      for (const auto& [key, _] : t.items())
        if (key != "kernel" && key != "minimality" && key != "pi_identity" && key != "objective" &&
            key != "minimise" && key != "decay")
          config_error("unknown tolerance '" + key + "'");
      Tolerances& tol = c.tolerances;
      tol.kernel = t.value("kernel", tol.kernel);
      tol.minimality = t.value("minimality", tol.minimality);
      tol.pi_identity = t.value("pi_identity", tol.pi_identity);
      tol.objective = t.value("objective", tol.objective);
      tol.minimise = t.value("minimise", tol.minimise);
      tol.decay = t.value("decay", tol.decay);
    }
  } catch (const json::exception& e) {
    config_error(std::string("bad field type: ") + e.what());
  }

  if (c.max_iterations < 1) config_error("max_iterations must be positive");
  if (!(c.p > 1.0)) config_error("p must exceed 1");
  if (!(c.R >= 1.0)) config_error("R must be at least 1");
  if (!(c.eps_fraction > 0.0)) config_error("eps_fraction must be positive");
  if (!c.potential.empty() && c.potential != "gradient" && c.potential != "stream2d")
    config_error("potential must be 'gradient' or 'stream2d'");
  for (double m : c.mean)
    if (!std::isfinite(m)) config_error("mean entries must be finite");
  if (c.pipeline == "domain" && c.dim != 2) config_error("the domain pipeline is two-dimensional");

  c.op = resolve_reference(c.op, is_builtin_operator(c.op), base_dir, "operator");
  c.integrand = resolve_reference(c.integrand, is_builtin_integrand(c.integrand), base_dir, "integrand");
  c.field = resolve_reference(c.field, is_builtin_field(c.field), base_dir, "field");

  if (const char* env = std::getenv("AFLAB_OUTPUT_DIR"); env && *env) c.output_dir = env;
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) config_error("file " + path.string() + " does not exist");
  return parse_config(read_text(path), path.parent_path());
}

std::string to_string(SuiteStatus s) {
  switch (s) {
    case SuiteStatus::pass: return "PASS";
    case SuiteStatus::fail: return "FAIL";
    case SuiteStatus::skipped: return "SKIPPED";
  }
  return "SKIPPED";
}

Field two_plateau_field() {
  Field u(TorusGrid(1, 10), 1);
  for (std::size_t c = 0; c < 10; ++c) u(c, 0) = 1.0;
  u(9, 0) = 4.0;
  return u;
}

namespace {

// Squared periodic distance to the centre, smooth across the torus seam.
double rho2(std::span<const double> x) {
  double r2 = 0.0;
  for (double xj : x) {
    const double s = std::sin(std::numbers::pi * (xj - 0.5)) / std::numbers::pi;
    r2 += s * s;
  }
  return r2;
}

}  // namespace

Field concentrating_gradient_field(int resolution, double delta) {
  const Field v = sample_field(TorusGrid(2, resolution), 1,
                               [&](std::span<const double> x, std::span<double> out) {
                                 out[0] = 0.1 * std::log(rho2(x) + delta * delta);
                               });
  return potential_to_field(v, PotentialKind::gradient);
}

Field sharp_peak_gradient_field(int resolution, double sigma) {
  const Field v = sample_field(TorusGrid(2, resolution), 1,
                               [&](std::span<const double> x, std::span<double> out) {
                                 out[0] = sigma * std::exp(-rho2(x) / (sigma * sigma));
                               });
  return potential_to_field(v, PotentialKind::gradient);
}

Field load_input_field(const std::string& name_or_file, int dim, int resolution) {
  if (name_or_file == "zero") return Field(TorusGrid(dim, resolution), dim);
  if (name_or_file == "two-plateau") return two_plateau_field();
  if (name_or_file == "concentrating") return concentrating_gradient_field(resolution, 0.05);
  if (name_or_file == "sharp-peak") return sharp_peak_gradient_field(resolution);
  return read_field(name_or_file);
}

std::vector<double> upper_level_grid(std::span<const double> maximal_values, int count) {
  if (maximal_values.empty() || count < 1)
    throw LabError(ErrorCode::invalid_input, "level grid needs values and count >= 1");
  std::vector<double> sorted(maximal_values.begin(), maximal_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double top = 0.9 * sorted.back();
  const double lo = sorted[sorted.size() * 3 / 4];
  if (!(lo > 0.0) || !(top > lo)) return geometric_grid(top > 0.0 ? top : 1.0, 2.0, count);
  if (count == 1) return {lo};
  return geometric_grid(lo, std::pow(top / lo, 1.0 / (count - 1)), count);
}

namespace {

struct Bundle {
  fs::path dir;
  std::vector<SuiteResult> suites;

  void add(std::string name, bool ok, std::string reason = {}) {
    suites.push_back({std::move(name), ok ? SuiteStatus::pass : SuiteStatus::fail, std::move(reason)});
  }
  void skip(std::string name, std::string reason) {
    suites.push_back({std::move(name), SuiteStatus::skipped, std::move(reason)});
  }
};

std::vector<double> config_lambdas(const LambdaGrid& g) {
  return geometric_grid(g.start, g.ratio, g.count);
}

// Levels for the reverse-estimate fit: ratio R^{1/4} from 5% of max|u| up to max|u|.
std::vector<double> fit_lambdas(std::span<const double> mags, double R) {
  const double top = *std::max_element(mags.begin(), mags.end());
  if (!(top > 0.0)) return {1.0};
  const double ratio = std::pow(std::max(R, 1.5), 0.25);
  const int count = static_cast<int>(std::ceil(std::log(20.0) / std::log(ratio))) + 1;
  return geometric_grid(0.05 * top, ratio, count);
}

PotentialKind potential_for(const ExperimentConfig& c, const DifferentialOperator& op) {
  if (!c.potential.empty()) return potential_kind_from_string(c.potential);
  const std::string& n = op.name();
  if (n.rfind("div", 0) == 0) return PotentialKind::stream2d;
  if (n.rfind("curl", 0) == 0) return PotentialKind::gradient;
  config_error("cannot infer a potential for operator '" + n + "'; set 'potential'");
}

json tolerances_json(const Tolerances& t) {
  return {{"kernel", t.kernel},       {"minimality", t.minimality}, {"pi_identity", t.pi_identity},
          {"objective", t.objective}, {"minimise", t.minimise},     {"decay", t.decay}};
}

json config_json(const ExperimentConfig& c) {
  json j = {{"pipeline", c.pipeline},
            {"grid", {{"dim", c.dim}, {"resolution", c.resolution}}},
            {"seed", c.seed},
            {"max_iterations", c.max_iterations},
            {"eps_fraction", c.eps_fraction},
            {"tolerances", tolerances_json(c.tolerances)}};
  if (!c.op.empty()) j["operator"] = c.op;
  if (!c.integrand.empty()) j["integrand"] = c.integrand;
  if (!c.field.empty()) j["field"] = c.field;
  if (!c.potential.empty()) j["potential"] = c.potential;
  if (!c.mean.empty()) j["mean"] = c.mean;
  if (c.lambda_grid.count > 0)
    j["lambda_grid"] = {{"start", c.lambda_grid.start},
                        {"ratio", c.lambda_grid.ratio},
                        {"count", c.lambda_grid.count}};
  if (c.pipeline == "holefill-only") {
    j["p"] = c.p;
    j["R"] = c.R;
  }
  return j;
}

Table higher_norm_table(std::span<const double> mags, const HoleFillingReport& report) {
  Table t;
  t.header = {"eps", "lp_eps_estimate", "shell_majorant", "geometric_majorant"};
  if (!(report.eps0 > 0.0)) return t;
  for (int k = 1; k <= 10; ++k) {
    HoleFillingReport r = report;
    const double eps = 0.1 * k * report.eps0;
    higher_norm(mags, r, eps);
    t.rows.push_back({eps, r.lp_eps_estimate, r.shell_majorant, r.geometric_majorant});
  }
  return t;
}

// Reverse fit, shells and higher norm: the common tail of every minimiser pipeline.
void hole_filling_suites(Bundle& b, std::span<const double> mags, double p, double R,
                         const ExperimentConfig& c, const std::string& prefix = {}) {
  const HoleFillingRun run =
      run_hole_filling(mags, p, R, fit_lambdas(mags, R), c.eps_fraction);
  write_csv(b.dir / (prefix + "reverse_fit.csv"), reverse_fit_table(run.fit));
  write_csv(b.dir / (prefix + "shells.csv"), shell_table(run.report));
  write_csv(b.dir / (prefix + "higher_norm.csv"), higher_norm_table(mags, run.report));
  write_text(b.dir / (prefix + "holefill_report.json"), to_json(run.report) + "\n");
  b.add("reverse-fit", run.fit.pass && std::isfinite(run.fit.C_fit),
        "C_fit = " + format_number(run.fit.C_fit) + ", C used = " + format_number(run.report.params.C));
  b.add("decay", run.report.decay_pass,
        run.report.first_violation >= 0
            ? "first violating shell " + std::to_string(run.report.first_violation)
            : std::string("every shell within decay^r ||u||_p^p"));
  b.add("higher-norm", run.report.higher_norm_ok && std::isfinite(run.report.lp_eps_estimate),
        "eps0 = " + format_number(run.report.eps0));
}

void minimiser_suite(Bundle& b, const MinimiserRun& run, const Tolerances& tol) {
  const bool ok = run.converged && run.monotone && run.kernel_residual <= tol.kernel &&
                  run.mean_error <= tol.kernel;
  b.add("minimiser", ok,
        "iterations " + std::to_string(run.iterations) + ", I = " + format_number(run.objective) +
            ", residual " + format_number(run.kernel_residual));
}

Field initial_field(const DifferentialOperator& op, const TorusGrid& grid, std::uint64_t seed,
                    std::span<const double> mean, double amplitude) {
  Field init = random_test_field(op, grid, seed, 4);
  init *= amplitude;
  init.shift(mean);
  return init;
}

std::vector<double> checked_mean(const ExperimentConfig& c, int channels) {
  if (c.mean.size() != static_cast<std::size_t>(channels))
    config_error("mean needs " + std::to_string(channels) + " entries");
  return c.mean;
}

void run_tp_verify(const ExperimentConfig& c, Bundle& b) {
  const Field u = load_input_field(c.field, c.dim, c.resolution);
  const PotentialKind kind = c.potential.empty() ? PotentialKind::gradient
                                                 : potential_kind_from_string(c.potential);
  write_field(b.dir / "field.bin", u);
  const MaximalField mu = maximal(u);
  const std::vector<double> lambdas = c.lambda_grid.count > 0
                                          ? config_lambdas(c.lambda_grid)
                                          : upper_level_grid(mu.values, 10);
  TruncationOptions opt;
  opt.kernel_tolerance = c.tolerances.kernel;
  TpReport rep;
  try {
    rep = verify_tp(u, lambdas, kind, opt);
  } catch (const LabError& e) {
    if (e.code() != ErrorCode::not_in_kernel && e.code() != ErrorCode::mean_mismatch) throw;
    b.add("tp-input", false, e.what());
    return;
  }
  write_csv(b.dir / "tp.csv", tp_table(rep));
  write_text(b.dir / "tp_report.json", to_json(rep) + "\n");

  bool budget = true, inclusion = true, kernel = true;
  for (const auto& r : rep.rows) {
    budget = budget && r.within_budget;
    inclusion = inclusion && r.inclusion_violations == 0;
    kernel = kernel && r.residual <= c.tolerances.kernel;
  }
  b.add("tp-budget", budget, "max linf ratio " + format_number(rep.max_linf_ratio));
  b.add("tp-inclusion", inclusion);
  b.add("tp-kernel", kernel);
  b.add("tp-uniformity", rep.linf_spread <= 2.0, "linf spread " + format_number(rep.linf_spread));
  b.skip("reverse-fit", "tp-verify has no minimiser");
  b.skip("decay", "tp-verify has no minimiser");
  b.skip("higher-norm", "tp-verify has no minimiser");
}

void run_thm1(const ExperimentConfig& c, Bundle& b) {
  const DifferentialOperator op =
      load_operator(c.op).with_scheme(Scheme::forward_difference);
  if (op.grid_dim() != c.dim) config_error("operator dimension differs from grid.dim");
  const PotentialKind kind = potential_for(c, op);
  const Integrand f = load_integrand(c.integrand, c.dim, op.source_dim());
  const auto mean = checked_mean(c, op.source_dim());
  const TorusGrid grid(c.dim, c.resolution);

  MinimiseOptions mo;
  mo.max_iterations = c.max_iterations;
  mo.tolerance = c.tolerances.minimise;
  const MinimiserRun run = minimise(f, op, initial_field(op, grid, c.seed, mean, 1.0), mean, mo);
  write_field(b.dir / "minimiser.bin", run.final);
  write_text(b.dir / "minimiser.json", to_json(run) + "\n");
  minimiser_suite(b, run, c.tolerances);

  const MaximalField mu = maximal(run.final);
  const std::vector<double> lambdas = c.lambda_grid.count > 0
                                          ? config_lambdas(c.lambda_grid)
                                          : geometric_grid(0.2 * mu.max(), 1.25, 12);
  std::vector<ComparisonRow> rows;
  for (double l : lambdas) rows.push_back(compare_truncation(f, run.final, mu, l, kind));
  write_csv(b.dir / "comparison.csv", comparison_table(rows));

  bool minimal = true, level = true;
  for (const auto& r : rows) {
    minimal = minimal && r.difference >= -c.tolerances.minimality * (1.0 + std::abs(r.I_u));
    if (r.above_lambda0) level = level && r.level_ok;
  }
  b.add("minimality", minimal);
  b.add("level-estimate", level);
  const auto mags = run.final.magnitudes();
  hole_filling_suites(b, mags, f.spec.p, 2.0, c);
}

void run_thm3(const ExperimentConfig& c, Bundle& b) {
  const DifferentialOperator op =
      load_operator(c.op).with_scheme(Scheme::forward_difference);
  if (op.grid_dim() != c.dim) config_error("operator dimension differs from grid.dim");
  const PotentialKind kind = potential_for(c, op);
  const Integrand f = load_integrand(c.integrand, c.dim, op.source_dim());
  const auto u0 = checked_mean(c, op.source_dim());
  const TorusGrid grid(c.dim, c.resolution);

  MinimiseOptions mo;
  mo.max_iterations = c.max_iterations;
  mo.tolerance = c.tolerances.minimise;
  const MinimiserRun run = minimise(f, op, initial_field(op, grid, c.seed, u0, 0.3), u0, mo);
  write_field(b.dir / "minimiser.bin", run.final);
  write_text(b.dir / "minimiser.json", to_json(run) + "\n");
  minimiser_suite(b, run, c.tolerances);
  b.add("objective", run.objective <= c.tolerances.objective,
        "I = " + format_number(run.objective));

  const MaximalField mu = maximal(run.final);
  const std::vector<double> lambdas = c.lambda_grid.count > 0
                                          ? config_lambdas(c.lambda_grid)
                                          : geometric_grid(0.3 * mu.max(), 1.3, 8);
  std::vector<MeanComparisonRow> rows;
  for (double l : lambdas) rows.push_back(compare_truncation_mean(f, run.final, u0, mu, l, kind));
  write_csv(b.dir / "comparison.csv", mean_comparison_table(rows));

  bool minimal = true, cont = true, shift = true, pi = true;
  double worst_pi = 0.0;
  for (const auto& r : rows) {
    minimal = minimal && r.minimality_gap >= -c.tolerances.minimality * (1.0 + std::abs(r.base.I_u));
    cont = cont && r.continuity_ok;
    shift = shift && r.shift_ok;
    worst_pi = std::max(worst_pi, r.pi_identity_residual);
  }
  pi = worst_pi <= c.tolerances.pi_identity;
  b.add("minimality", minimal);
  b.add("continuity", cont);
  b.add("mean-shift", shift);
  b.add("pi-identity", pi, "max residual " + format_number(worst_pi));
  const auto mags = run.final.magnitudes();
  hole_filling_suites(b, mags, f.spec.p, 2.0, c);
}

void write_grid_csv(const fs::path& path, const TorusGrid& grid, std::span<const double> values,
                    const std::string& comment) {
  std::string s = "# " + comment + "\n";
  const int N = grid.resolution();
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k)
      s += (k ? "," : "") + format_number(values[static_cast<std::size_t>(i) * N + k]);
    s += "\n";
  }
  write_text(path, s);
}

void run_domain(const ExperimentConfig& c, Bundle& b) {
  const int half = c.resolution / 2;
  if (half % 2 != 0) config_error("domain needs resolution divisible by 4");
  const Integrand f = load_integrand(c.integrand, 2, 2);
  const auto mean = checked_mean(c, 2);

  Field init = random_divfree_cube_field(2, half, c.seed, 3);
  init.shift(mean);
  MinimiseOptions mo;
  mo.max_iterations = c.max_iterations;
  mo.tolerance = c.tolerances.minimise;
  const MinimiserRun run = minimise_on_cube(f, init, mean, mo);
  write_field(b.dir / "cube_minimiser.bin", run.final);
  write_text(b.dir / "minimiser.json", to_json(run) + "\n");
  const bool converged = run.converged && run.monotone && run.mean_error <= c.tolerances.kernel;
  b.add("minimiser", converged,
        "iterations " + std::to_string(run.iterations) + ", I = " + format_number(run.objective));

  const double top = run.final.max_magnitude();
  const std::vector<double> lambdas = c.lambda_grid.count > 0
                                          ? config_lambdas(c.lambda_grid)
                                          : geometric_grid(0.05 * top, std::pow(2.0, 0.25), 22);
  const DomainReport rep = domain_pipeline(f, run.final, lambdas, c.eps_fraction);
  write_field(b.dir / "extended.bin", reflect_extend_divfree(run.final, c.tolerances.kernel));
  write_csv(b.dir / "domain.csv", domain_table(rep.rows));
  write_text(b.dir / "extension.json", to_json(rep.extension) + "\n");
  write_grid_csv(b.dir / "c3_map.csv", TorusGrid(2, c.resolution), rep.extension.c3_map,
                 "M(Eu)/Mu per torus cell, 0 outside the cube; rows follow axis 0");

  const bool use_ext2 = rep.ext2_route_ok || !rep.ext_route_ok;
  const HoleFillingReport& hf = use_ext2 ? rep.holefill_ext2 : rep.holefill_ext;
  write_csv(b.dir / "reverse_fit.csv", reverse_fit_table(use_ext2 ? rep.fit_ext2 : rep.fit_ext));
  write_csv(b.dir / "shells.csv", shell_table(hf));
  const auto mags = run.final.magnitudes();
  write_csv(b.dir / "higher_norm.csv", higher_norm_table(mags, hf));
  write_text(b.dir / "holefill_report.json", to_json(hf) + "\n");

  b.add("extension", rep.extension.residual <= c.tolerances.kernel &&
                         rep.extension.agreement_error == 0.0,
        "interface residual " + format_number(rep.extension.residual));
  b.add("pointwise-maximal", rep.extension.pointwise_bound_ok,
        "max M(Eu)/(2^n Mu) = " + format_number(rep.extension.pointwise_max_ratio));
  bool chain = true;
  for (const auto& r : rep.rows) chain = chain && r.chain_ok;
  b.add("domain-chain", chain);
  b.add("decay", rep.ext2_route_ok || rep.ext_route_ok,
        std::string("route ") + (use_ext2 ? "ext2" : "ext") +
            ", R = " + format_number(use_ext2 ? rep.R_ext2 : rep.R_ext));
  b.add("higher-norm", hf.higher_norm_ok, "eps0 = " + format_number(hf.eps0));
}

void run_holefill_only(const ExperimentConfig& c, Bundle& b) {
  const Field u = load_input_field(c.field, c.dim, c.resolution);
  write_field(b.dir / "field.bin", u);
  const auto mags = u.magnitudes();
  std::vector<double> lambdas;
  if (c.lambda_grid.count > 0)
    lambdas = config_lambdas(c.lambda_grid);
  else if (c.field == "two-plateau")
    lambdas = {0.75, 1.5, 3.0};
  else
    lambdas = fit_lambdas(mags, c.R);
  const HoleFillingRun run = run_hole_filling(mags, c.p, c.R, lambdas, c.eps_fraction);
  write_csv(b.dir / "reverse_fit.csv", reverse_fit_table(run.fit));
  write_csv(b.dir / "shells.csv", shell_table(run.report));
  write_csv(b.dir / "higher_norm.csv", higher_norm_table(mags, run.report));
  write_text(b.dir / "holefill_report.json", to_json(run.report) + "\n");
  b.add("reverse-fit", run.fit.pass && std::isfinite(run.fit.C_fit),
        "C_fit = " + format_number(run.fit.C_fit));
  b.add("decay", run.report.decay_pass);
  b.add("higher-norm", run.report.higher_norm_ok, "eps0 = " + format_number(run.report.eps0));
}

}  // namespace

RunOutcome run(const ExperimentConfig& config) {
  Bundle b;
  b.dir = config.output_dir;
  fs::create_directories(b.dir);

  try {
    if (config.pipeline == "tp-verify") run_tp_verify(config, b);
    else if (config.pipeline == "thm1") run_thm1(config, b);
    else if (config.pipeline == "thm3") run_thm3(config, b);
    else if (config.pipeline == "domain") run_domain(config, b);
    else if (config.pipeline == "holefill-only") run_holefill_only(config, b);
    else config_error("unknown pipeline '" + config.pipeline + "'");
  } catch (const LabError& e) {
    // Numerical breakdowns become a failed suite; configuration problems propagate.
    if (e.code() == ErrorCode::invalid_input || e.code() == ErrorCode::io_error ||
        e.code() == ErrorCode::incompatible_operator)
      throw;
    b.add("pipeline", false, e.what());
  }

  RunOutcome out;
  out.bundle = b.dir;
  out.suites = b.suites;
  json suites = json::array();
  bool all = true;
  for (const auto& s : b.suites) {
    suites.push_back({{"name", s.name}, {"status", to_string(s.status)}, {"reason", s.reason}});
    all = all && s.status != SuiteStatus::fail;
  }
  out.exit_code = all ? 0 : 1;
  const json summary = {{"config", config_json(config)},
                        {"suites", suites},
                        {"status", all ? "PASS" : "FAIL"}};
  write_text(b.dir / "summary.json", summary.dump(2) + "\n");
  return out;
}

namespace {

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvData read_csv(const fs::path& path) {
  CsvData d;
  if (!fs::exists(path)) return d;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (d.header.empty()) {
      d.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& s : cells) row.push_back(std::strtod(s.c_str(), nullptr));
    d.rows.push_back(std::move(row));
  }
  return d;
}

int column(const CsvData& d, const std::string& name) {
  for (std::size_t i = 0; i < d.header.size(); ++i)
    if (d.header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

std::vector<fs::path> emit_plotdata(const fs::path& bundle, const fs::path& out_dir) {
  if (!fs::exists(bundle / "summary.json"))
    throw LabError(ErrorCode::io_error, "no report bundle at " + bundle.string());
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  {
    const CsvData fit = read_csv(bundle / "reverse_fit.csv");
    std::string s =
        "# reverse estimate  int_{|u|>=R lambda} |u|^p <= C lambda^{p-1} int_{|u|>=lambda} |u|\n"
        "# lambda  ratio(lhs/divisor)  running_max(C_fit)\n";
    const int cl = column(fit, "lambda"), cr = column(fit, "ratio"), ce = column(fit, "empty");
    double running = 0.0;
    for (const auto& r : fit.rows) {
      if (ce >= 0 && r[ce] == 0.0 && std::isfinite(r[cr])) running = std::max(running, r[cr]);
      s += format_number(r[cl]) + " " + format_number(r[cr]) + " " + format_number(running) + "\n";
    }
    written.push_back(out_dir / "reverse_fit.dat");
    write_text(written.back(), s);
  }
  {
    const CsvData shells = read_csv(bundle / "shells.csv");
    std::string s =
        "# shell decay  int_{S^r lambda0 <= |u| < S^{r+1} lambda0} |u|^p <= decay^r ||u||_p^p\n"
        "# r  shell_integral  bound(decay^r ||u||_p^p)\n";
    const int cr = column(shells, "r"), ci = column(shells, "integral"), cb = column(shells, "bound");
    for (const auto& r : shells.rows)
      s += format_number(r[cr]) + " " + format_number(r[ci]) + " " + format_number(r[cb]) + "\n";
    written.push_back(out_dir / "shells.dat");
    write_text(written.back(), s);
  }
  {
    const CsvData hn = read_csv(bundle / "higher_norm.csv");
    std::string s =
        "# higher integrability  int_{|u|>=lambda0} |u|^{p+eps} against the shell and geometric majorants\n"
        "# eps  lp_eps_estimate  shell_majorant  geometric_majorant\n";
    for (const auto& r : hn.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? " " : "") + format_number(r[i]);
      s += "\n";
    }
    written.push_back(out_dir / "higher_norm.dat");
    write_text(written.back(), s);
  }
  if (fs::exists(bundle / "c3_map.csv")) {
    written.push_back(out_dir / "c3_map.csv");
    fs::copy_file(bundle / "c3_map.csv", written.back(), fs::copy_options::overwrite_existing);
  }
  return written;
}

}  // namespace aflab
