// aflab: command line front end for the A-free field toolkit.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aflab/error.hpp"
#include "aflab/extension.hpp"
#include "aflab/holefill.hpp"
#include "aflab/io.hpp"
#include "aflab/maximal.hpp"
#include "aflab/minimise.hpp"
#include "aflab/pipeline.hpp"
#include "aflab/truncation.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace aflab;
using nlohmann::json;

namespace {

// Usage and configuration problems exit with 2, numerical failures with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number '") + item + "' in " + what);
    }
  }
  return out;
}

// "start,ratio,count"
std::vector<double> parse_lambda_grid(const std::string& text) {
  const auto v = parse_numbers(text, "--lambda-grid");
  if (v.size() != 3) throw UsageError("--lambda-grid expects start,ratio,count");
  try {
    return geometric_grid(v[0], v[1], static_cast<int>(v[2]));
  } catch (const LabError& e) {
    throw UsageError(e.what());
  }
}

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

Field scalar_field(const MaximalField& mu) { return Field(mu.grid, 1, mu.values); }

struct Common {
  std::string field;
  std::string out = "aflab_out";
  std::string lambda_grid;
  std::string kind = "gradient";
};

int cmd_maximal(const Common& o, const std::string& method) {
  const Field u = read_field(o.field);
  MaximalMethod m = MaximalMethod::automatic;
  if (method == "direct") m = MaximalMethod::direct;
  else if (method == "fft") m = MaximalMethod::fft;
  else if (method != "auto") throw UsageError("--method must be auto, direct or fft");
  const MaximalField mu = maximal(u, m);
  write_field(fs::path(o.out) / "maximal.bin", scalar_field(mu));
  if (o.lambda_grid.empty()) {
    std::printf("max Mu = %s\n", format_number(mu.max()).c_str());
    return 0;
  }
  const auto lambdas = parse_lambda_grid(o.lambda_grid);
  const WeakTypeReport rep = weak_type_check(u, mu, lambdas);
  write_csv(fs::path(o.out) / "weak_type.csv", weak_type_table(rep));
  write_text(fs::path(o.out) / "weak_type.json", to_json(rep) + "\n");
  std::printf("max Mu = %s, weak-type constant %s\n", format_number(mu.max()).c_str(),
              format_number(rep.fitted_constant).c_str());
  return rep.pass ? 0 : 1;
}

int cmd_truncate(const Common& o, double lambda, const std::string& scheme) {
  const Field u = read_field(o.field);
  TruncationOptions opt;
  opt.scheme = scheme_from_string(scheme);
  const TruncationResult r = lipschitz_truncate(u, lambda, potential_kind_from_string(o.kind), opt);
  write_field(fs::path(o.out) / "truncated.bin", r.truncated);
  write_json(fs::path(o.out) / "truncate.json",
             {{"lambda", num(r.lambda)},
              {"linf_ratio", num(r.linf_ratio)},
              {"linf_bound", num(r.linf_bound)},
              {"bad_cells", r.bad_cells},
              {"inclusion_violations", r.inclusion_violations},
              {"residual", num(r.residual)},
              {"spectral_residual", num(r.spectral_residual)},
              {"lipschitz_constant", num(r.lipschitz_constant)},
              {"measured_lipschitz", num(r.measured_lipschitz)},
              {"trivial", r.trivial}});
  std::printf("linf ratio %s, %zu changed cells, residual %s\n", format_number(r.linf_ratio).c_str(),
              r.bad_cells, format_number(r.residual).c_str());
  return 0;
}

int cmd_verify_tp(const Common& o) {
  const Field u = read_field(o.field);
  std::vector<double> lambdas;
  if (o.lambda_grid.empty()) lambdas = upper_level_grid(maximal(u).values, 10);
  else lambdas = parse_lambda_grid(o.lambda_grid);
  const TpReport rep = verify_tp(u, lambdas, potential_kind_from_string(o.kind));
  write_csv(fs::path(o.out) / "tp.csv", tp_table(rep));
  write_text(fs::path(o.out) / "tp_report.json", to_json(rep) + "\n");
  std::printf("%s: max linf ratio %s, spread %s\n", rep.pass ? "PASS" : "FAIL",
              format_number(rep.max_linf_ratio).c_str(), format_number(rep.linf_spread).c_str());
  return rep.pass ? 0 : 1;
}

struct MinimizeArgs {
  std::string integrand = "heterogeneous";
  std::string op = "div2";
  std::string grid = "2,32";
  std::string mean;
  std::uint64_t seed = 1;
  int max_iters = 2000;
};

int cmd_minimize(const Common& o, const MinimizeArgs& a) {
  const auto g = parse_numbers(a.grid, "--grid");
  if (g.size() != 2) throw UsageError("--grid expects dim,resolution");
  const TorusGrid grid(static_cast<int>(g[0]), static_cast<int>(g[1]));
  const DifferentialOperator op = load_operator(a.op).with_scheme(Scheme::forward_difference);
  if (op.grid_dim() != grid.dim()) throw UsageError("operator and grid dimensions differ");
  const Integrand f = load_integrand(a.integrand, grid.dim(), op.source_dim());
  std::vector<double> mean(op.source_dim(), 0.0);
  if (!a.mean.empty()) mean = parse_numbers(a.mean, "--mean");
  if (mean.size() != static_cast<std::size_t>(op.source_dim()))
    throw UsageError("--mean needs one entry per channel");
  Field init = random_test_field(op, grid, a.seed, 4);
  init.shift(mean);
  MinimiseOptions mo;
  mo.max_iterations = a.max_iters;
  const MinimiserRun run = minimise(f, op, init, mean, mo);
  write_field(fs::path(o.out) / "minimiser.bin", run.final);
  write_text(fs::path(o.out) / "minimiser.json", to_json(run) + "\n");
  std::printf("I = %s after %d iterations (%s)\n", format_number(run.objective).c_str(),
              run.iterations, run.converged ? "converged" : "budget exhausted");
  return run.converged ? 0 : 1;
}

int cmd_compare(const Common& o, const std::string& integrand, const std::string& mean_text) {
  const Field u = read_field(o.field);
  const Integrand f = load_integrand(integrand, u.grid().dim(), u.channels());
  const PotentialKind kind = potential_kind_from_string(o.kind);
  const MaximalField mu = maximal(u);
  const auto lambdas = o.lambda_grid.empty() ? geometric_grid(0.2 * mu.max(), 1.25, 12)
                                             : parse_lambda_grid(o.lambda_grid);
  bool ok = true;
  if (mean_text.empty()) {
    std::vector<ComparisonRow> rows;
    for (double l : lambdas) {
      rows.push_back(compare_truncation(f, u, mu, l, kind));
      ok = ok && rows.back().minimality_ok && (!rows.back().above_lambda0 || rows.back().level_ok);
    }
    write_csv(fs::path(o.out) / "comparison.csv", comparison_table(rows));
  } else {
    const auto u0 = parse_numbers(mean_text, "--mean");
    std::vector<MeanComparisonRow> rows;
    for (double l : lambdas) {
      rows.push_back(compare_truncation_mean(f, u, u0, mu, l, kind));
      const auto& r = rows.back();
      ok = ok && r.minimality_ok && r.continuity_ok && r.shift_ok && r.pi_ok;
    }
    write_csv(fs::path(o.out) / "comparison.csv", mean_comparison_table(rows));
  }
  std::printf("%s over %zu levels\n", ok ? "PASS" : "FAIL", lambdas.size());
  return ok ? 0 : 1;
}

int cmd_hole_fill(const Common& o, double p, double R, double eps) {
  const Field u = read_field(o.field);
  const auto mags = u.magnitudes();
  std::vector<double> lambdas;
  if (o.lambda_grid.empty()) {
    double top = 0.0;
    for (double m : mags) top = std::max(top, m);
    if (!(top > 0.0)) throw LabError(ErrorCode::degenerate_input, "field vanishes identically");
    const double ratio = std::pow(std::max(R, 1.5), 0.25);
    lambdas = geometric_grid(0.05 * top, ratio,
                             static_cast<int>(std::ceil(std::log(20.0) / std::log(ratio))) + 1);
  } else {
    lambdas = parse_lambda_grid(o.lambda_grid);
  }
  HoleFillingRun run = run_hole_filling(mags, p, R, lambdas, 0.5);
  if (eps > 0.0) {
    higher_norm(mags, run.report, eps);
    run.report.pass = run.report.pass && run.fit.pass;
  }
  write_csv(fs::path(o.out) / "reverse_fit.csv", reverse_fit_table(run.fit));
  write_csv(fs::path(o.out) / "shells.csv", shell_table(run.report));
  write_text(fs::path(o.out) / "holefill_report.json", to_json(run.report) + "\n");
  std::printf("%s: C_fit %s, S %s, eps0 %s\n", run.report.pass ? "PASS" : "FAIL",
              format_number(run.fit.C_fit).c_str(), format_number(run.report.S).c_str(),
              format_number(run.report.eps0).c_str());
  return run.report.pass ? 0 : 1;
}

int cmd_extend(const Common& o) {
  const Field cube = read_field(o.field);
  const Field ext = reflect_extend_divfree(cube);
  write_field(fs::path(o.out) / "extended.bin", ext);
  const ExtensionReport rep = verify_pointwise_maximal_bound(cube, ext);
  write_text(fs::path(o.out) / "extension.json", to_json(rep) + "\n");
  std::printf("interface residual %s, max M(Eu)/(2^n Mu) %s\n", format_number(rep.residual).c_str(),
              format_number(rep.pointwise_max_ratio).c_str());
  return rep.pointwise_bound_ok ? 0 : 1;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig config = load_config(config_path);
  const RunOutcome out = run(config);
  for (const auto& s : out.suites)
    std::printf("%-18s %-7s %s\n", s.name.c_str(), to_string(s.status).c_str(), s.reason.c_str());
  std::printf("bundle: %s\n", out.bundle.string().c_str());
  return out.exit_code;
}

int cmd_emit_plotdata(const std::string& bundle, const std::string& out) {
  for (const auto& p : emit_plotdata(bundle, out)) std::printf("%s\n", p.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncation, hole filling and higher integrability experiments for A-free fields"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");

  Common common;
  auto add_field = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--field", common.field, "input field (.bin)");
    if (required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
  };

  std::string method = "auto";
  auto* maximal_cmd = app.add_subcommand("maximal", "maximal function and weak-type table");
  add_field(maximal_cmd);
  maximal_cmd->add_option("--method", method, "auto, direct or fft");
  maximal_cmd->add_option("--lambda-grid", common.lambda_grid, "start,ratio,count");

  double lambda = 0.0;
  std::string scheme = "forward";
  auto* truncate_cmd = app.add_subcommand("truncate", "Lipschitz truncation at one level");
  add_field(truncate_cmd);
  truncate_cmd->add_option("--lambda", lambda, "truncation level")->required()->check(CLI::PositiveNumber);
  truncate_cmd->add_option("--kind", common.kind, "gradient or stream2d");
  truncate_cmd->add_option("--scheme", scheme, "discrete scheme of the kernel check");

  auto* tp_cmd = app.add_subcommand("verify-tp", "truncation contract over a level sweep");
  add_field(tp_cmd);
  tp_cmd->add_option("--lambda-grid", common.lambda_grid, "start,ratio,count");
  tp_cmd->add_option("--kind", common.kind, "gradient or stream2d");

  MinimizeArgs margs;
  auto* min_cmd = app.add_subcommand("minimize", "constrained minimisation of an integral functional");
  min_cmd->add_option("--out", common.out, "output directory");
  min_cmd->add_option("--integrand", margs.integrand, "builtin name or JSON file");
  min_cmd->add_option("--operator", margs.op, "builtin name or JSON file");
  min_cmd->add_option("--grid", margs.grid, "dim,resolution");
  min_cmd->add_option("--mean", margs.mean, "comma separated mean vector");
  min_cmd->add_option("--seed", margs.seed, "seed of the initial field");
  min_cmd->add_option("--max-iters", margs.max_iters, "iteration budget")->check(CLI::PositiveNumber);

  std::string cmp_integrand = "heterogeneous", cmp_mean;
  auto* cmp_cmd = app.add_subcommand("compare", "truncation comparison on a minimiser");
  add_field(cmp_cmd);
  cmp_cmd->add_option("--integrand", cmp_integrand, "builtin name or JSON file");
  cmp_cmd->add_option("--kind", common.kind, "gradient or stream2d");
  cmp_cmd->add_option("--lambda-grid", common.lambda_grid, "start,ratio,count");
  cmp_cmd->add_option("--mean", cmp_mean, "prescribed mean; selects the mean-shift comparison");

  double p = 2.0, R = 2.0, eps = 0.0;
  auto* hf_cmd = app.add_subcommand("hole-fill", "reverse estimate fit, shell decay and higher norm");
  add_field(hf_cmd);
  hf_cmd->add_option("--p", p, "integrability exponent");
  hf_cmd->add_option("--R", R, "level ratio of the reverse estimate");
  hf_cmd->add_option("--lambda-grid", common.lambda_grid, "start,ratio,count");
  hf_cmd->add_option("--eps", eps, "exponent gain to evaluate (default eps0/2)");

  auto* ext_cmd = app.add_subcommand("extend", "reflection extension of a cube field");
  add_field(ext_cmd);

  std::string config;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("--config", config, "experiment JSON")->required();

  std::string bundle, plot_out = "plotdata";
  auto* plot_cmd = app.add_subcommand("emit-plotdata", "plot-ready columns from a report bundle");
  plot_cmd->add_option("--bundle", bundle, "bundle directory")->required();
  plot_cmd->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*maximal_cmd) return cmd_maximal(common, method);
    if (*truncate_cmd) return cmd_truncate(common, lambda, scheme);
    if (*tp_cmd) return cmd_verify_tp(common);
    if (*min_cmd) return cmd_minimize(common, margs);
    if (*cmp_cmd) return cmd_compare(common, cmp_integrand, cmp_mean);
    if (*hf_cmd) return cmd_hole_fill(common, p, R, eps);
    if (*ext_cmd) return cmd_extend(common);
    if (*run_cmd) return cmd_run(config);
    if (*plot_cmd) return cmd_emit_plotdata(bundle, plot_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const LabError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config = e.code() == ErrorCode::invalid_input || e.code() == ErrorCode::io_error ||
                        e.code() == ErrorCode::incompatible_operator ||
                        e.code() == ErrorCode::bad_integrand;
    return config ? 2 : 1;
  }
  return 2;
}
