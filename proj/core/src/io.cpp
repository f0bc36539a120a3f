#include "aflab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "aflab/error.hpp"
#include "json.hpp"

namespace aflab {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "field files are little-endian");

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw LabError(ErrorCode::invalid_input, std::string("malformed ") + what + " JSON: " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LabError(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

void write_field(const std::filesystem::path& path, const Field& u) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError(ErrorCode::io_error, "cannot write " + path.string());
  const std::int64_t header[3] = {u.grid().dim(), u.grid().resolution(), u.channels()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(u.values().data()),
            static_cast<std::streamsize>(u.values().size() * sizeof(double)));
  if (!out) throw LabError(ErrorCode::io_error, "short write to " + path.string());
  json side = {{"format", "aflab-field"},
               {"dim", u.grid().dim()},
               {"resolution", u.grid().resolution()},
               {"channels", u.channels()},
               {"layout", "cell-major, channel-minor, axis 0 slowest"},
               {"dtype", "float64-le"}};
  write_text(path.string() + ".json", side.dump(2) + "\n");
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LabError(ErrorCode::io_error, "cannot open " + path.string());
  std::int64_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw LabError(ErrorCode::io_error, "truncated field header in " + path.string());
  if (header[0] < 1 || header[0] > 3 || header[1] < 4 || header[1] > 4096 || header[2] < 1 ||
      header[2] > 64)
    throw LabError(ErrorCode::io_error, "implausible field header in " + path.string());
  const TorusGrid grid(static_cast<int>(header[0]), static_cast<int>(header[1]));
  std::vector<double> values(grid.cell_count() * static_cast<std::size_t>(header[2]));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw LabError(ErrorCode::io_error, "truncated field payload in " + path.string());
  return Field(grid, static_cast<int>(header[2]), std::move(values));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const Table& table) {
  std::string s;
  for (const auto& c : table.comments) s += "# " + c + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i)
    s += (i ? "," : "") + table.header[i];
  s += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
    s += "\n";
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  write_text(path, to_csv(table));
}

Table level_set_table(const std::vector<LevelSetStats>& stats) {
  Table t;
  t.header = {"lambda", "measure", "integral_u", "integral_up"};
  for (const auto& s : stats) t.rows.push_back({s.lambda, s.measure, s.integral_u, s.integral_up});
  return t;
}

Table weak_type_table(const WeakTypeReport& report) {
  Table t;
  t.header = {"lambda", "measure_maximal_set", "integral_half_level", "ratio", "skipped"};
  for (const auto& r : report.rows)
    t.rows.push_back({r.lambda, r.measure_maximal_set, r.integral_half_level, r.ratio,
                      r.skipped ? 1.0 : 0.0});
  return t;
}

Table reverse_fit_table(const ReverseFit& fit) {
  Table t;
  t.header = {"lambda", "lhs", "divisor", "ratio", "empty", "fail"};
  for (const auto& r : fit.rows)
    t.rows.push_back({r.lambda, r.lhs, r.divisor, r.ratio, r.empty ? 1.0 : 0.0, r.fail ? 1.0 : 0.0});
  return t;
}

Table shell_table(const HoleFillingReport& report) {
  Table t;
  t.header = {"r", "lo", "hi", "integral", "ratio_to_previous", "bound", "ok"};
  for (const auto& r : report.shell_table)
    t.rows.push_back({static_cast<double>(r.r), r.lo, r.hi, r.integral, r.ratio_to_previous,
                      r.bound, r.ok ? 1.0 : 0.0});
  return t;
}

Table tp_table(const TpReport& report) {
  Table t;
  t.header = {"lambda", "linf_ratio", "inclusion_violations", "residual", "bad_cells", "trivial",
              "within_budget"};
  for (const auto& r : report.rows)
    t.rows.push_back({r.lambda, r.linf_ratio, static_cast<double>(r.inclusion_violations), r.residual,
                      static_cast<double>(r.bad_cells), r.trivial ? 1.0 : 0.0,
                      r.within_budget ? 1.0 : 0.0});
  return t;
}

Table comparison_table(const std::vector<ComparisonRow>& rows) {
  Table t;
  t.header = {"lambda",      "I_u",         "I_trunc",     "difference",   "minimality_ok",
              "measure_E",   "integral_E",  "integral_Mu", "C_A",          "upper_bound",
              "upper_ok",    "level_bound", "level_ok",    "lambda0",      "above_lambda0",
              "widman_lambda", "widman_lhs", "widman_divisor", "widman_ratio", "bad_cells"};
  for (const auto& r : rows)
    t.rows.push_back({r.lambda, r.I_u, r.I_trunc, r.difference, r.minimality_ok ? 1.0 : 0.0,
                      r.measure_E, r.integral_E, r.integral_Mu, r.C_A, r.upper_bound,
                      r.upper_ok ? 1.0 : 0.0, r.level_bound, r.level_ok ? 1.0 : 0.0, r.lambda0,
                      r.above_lambda0 ? 1.0 : 0.0, r.widman_lambda, r.widman_lhs, r.widman_divisor,
                      r.widman_ratio, static_cast<double>(r.bad_cells)});
  return t;
}

Table mean_comparison_table(const std::vector<MeanComparisonRow>& rows) {
  Table t;
  t.header = {"lambda",         "I_u",           "I_trunc",          "I_bar",
              "minimality_gap", "minimality_ok", "shift_norm",       "shift_bound",
              "continuity_gap", "continuity_bound", "continuity_ok", "measured_constant",
              "pi_identity_residual", "pi_ok", "widman_ratio"};
  for (const auto& r : rows)
    t.rows.push_back({r.base.lambda, r.base.I_u, r.base.I_trunc, r.I_bar, r.minimality_gap,
                      r.minimality_ok ? 1.0 : 0.0, r.shift_norm, r.shift_bound, r.continuity_gap,
                      r.continuity_bound, r.continuity_ok ? 1.0 : 0.0, r.measured_constant,
                      r.pi_identity_residual, r.pi_ok ? 1.0 : 0.0, r.base.widman_ratio});
  return t;
}

Table domain_table(const std::vector<DomainRow>& rows) {
  Table t;
  t.header = {"lambda", "measure_MEu", "integral_omega", "C_A", "chain_bound", "chain_ok",
              "trivial", "measured_constant"};
  for (const auto& r : rows)
    t.rows.push_back({r.lambda, r.measure_MEu, r.integral_omega, r.C_A, r.chain_bound,
                      r.chain_ok ? 1.0 : 0.0, r.trivial ? 1.0 : 0.0, r.measured_constant});
  return t;
}

DifferentialOperator parse_operator(const std::string& json_text) {
  const json j = parse_json(json_text, "operator");
  if (j.is_string()) return builtin_operator(j.get<std::string>());
  try {
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    const int l = j.at("l").get<int>();
    std::vector<DifferentialOperator::Term> terms;
    for (const auto& c : j.at("coefficients")) {
      DifferentialOperator::Term t;
      const auto alpha = c.at("alpha").get<std::vector<int>>();
      if (alpha.size() != static_cast<std::size_t>(n))
        throw LabError(ErrorCode::incompatible_operator, "multi-index length must equal n");
      for (int k = 0; k < n; ++k) t.alpha.exponents[k] = alpha[k];
      const auto rows = c.at("matrix").get<std::vector<std::vector<double>>>();
      if (rows.size() != static_cast<std::size_t>(l))
        throw LabError(ErrorCode::incompatible_operator, "coefficient matrix needs l rows");
      t.matrix = Eigen::MatrixXd::Zero(l, m);
      for (int r = 0; r < l; ++r) {
        if (rows[r].size() != static_cast<std::size_t>(m))
          throw LabError(ErrorCode::incompatible_operator, "coefficient matrix needs m columns");
        for (int k = 0; k < m; ++k) t.matrix(r, k) = rows[r][k];
      }
      terms.push_back(std::move(t));
    }
    const Scheme scheme = scheme_from_string(get_or<std::string>(j, "scheme", "spectral"));
    return DifferentialOperator(n, m, l, std::move(terms), get_or<std::string>(j, "name", "custom"),
                                scheme);
  } catch (const json::exception& e) {
    throw LabError(ErrorCode::invalid_input, std::string("bad operator JSON: ") + e.what());
  }
}

DifferentialOperator load_operator(const std::string& name_or_file) {
  if (std::filesystem::exists(name_or_file)) return parse_operator(read_text(name_or_file));
  return builtin_operator(name_or_file);
}

std::string operator_to_json(const DifferentialOperator& op) {
  json coeffs = json::array();
  for (const auto& t : op.terms()) {
    json alpha = json::array();
    for (int k = 0; k < op.grid_dim(); ++k) alpha.push_back(t.alpha.exponents[k]);
    json rows = json::array();
    for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) row.push_back(t.matrix(r, c));
      rows.push_back(row);
    }
    coeffs.push_back({{"alpha", alpha}, {"matrix", rows}});
  }
  json j = {{"name", op.name()},
            {"n", op.grid_dim()},
            {"m", op.source_dim()},
            {"l", op.target_dim()},
            {"k", op.order()},
            {"scheme", to_string(op.scheme())},
            {"coefficients", coeffs}};
  return j.dump(2);
}

Integrand parse_integrand(const std::string& json_text, int grid_dim, int channels) {
  const json j = parse_json(json_text, "integrand");
  if (j.is_string()) return builtin_integrand(j.get<std::string>(), grid_dim, channels);
  try {
    const std::string name = j.at("name").get<std::string>();
    const double p = get_or(j, "p", 2.0);
    if (name == "power") return power_integrand(grid_dim, channels, p);
    if (name == "heterogeneous")
      return heterogeneous_integrand(grid_dim, channels, p, get_or(j, "nu", 4.0),
                                     get_or(j, "bands", 2), get_or(j, "axis", 1),
                                     get_or(j, "b", 0.0));
    if (name == "quasiconformal") return quasiconformal_integrand(grid_dim, get_or(j, "K", 2.0));
    if (name == "plap-coupled") return plap_coupled_integrand(p);
    throw LabError(ErrorCode::bad_integrand, "unknown integrand '" + name + "'");
  } catch (const json::exception& e) {
    throw LabError(ErrorCode::invalid_input, std::string("bad integrand JSON: ") + e.what());
  }
}

Integrand load_integrand(const std::string& name_or_file, int grid_dim, int channels) {
  if (std::filesystem::exists(name_or_file))
    return parse_integrand(read_text(name_or_file), grid_dim, channels);
  return builtin_integrand(name_or_file, grid_dim, channels);
}

std::string mask_to_json(const DomainMask& mask) {
  json runs = json::array();
  const auto& in = mask.inside;
  std::size_t i = 0;
  bool current = false;
  while (i < in.size()) {
    std::size_t len = 0;
    while (i < in.size() && in[i] == current) {
      ++i;
      ++len;
    }
    runs.push_back(len);
    current = !current;
  }
  json j = {{"dim", mask.grid.dim()},
            {"resolution", mask.grid.resolution()},
            {"start", false},
            {"runs", runs}};
  return j.dump();
}

DomainMask parse_mask(const std::string& json_text) {
  const json j = parse_json(json_text, "mask");
  try {
    const TorusGrid grid(j.at("dim").get<int>(), j.at("resolution").get<int>());
    bool current = get_or(j, "start", false);
    std::vector<bool> inside;
    inside.reserve(grid.cell_count());
    for (const auto& r : j.at("runs")) {
      const auto len = r.get<std::size_t>();
      if (inside.size() + len > grid.cell_count())
        throw LabError(ErrorCode::invalid_input, "mask runs exceed the grid");
      inside.insert(inside.end(), len, current);
      current = !current;
    }
    if (inside.size() != grid.cell_count())
      throw LabError(ErrorCode::invalid_input, "mask runs do not cover the grid");
    return make_mask(grid, std::move(inside));
  } catch (const json::exception& e) {
    throw LabError(ErrorCode::invalid_input, std::string("bad mask JSON: ") + e.what());
  }
}

DomainMask load_mask(const std::filesystem::path& path) { return parse_mask(read_text(path)); }

namespace {

json shells_json(const HoleFillingReport& r) {
  json rows = json::array();
  for (const auto& s : r.shell_table)
    rows.push_back({{"r", s.r},
                    {"lo", num(s.lo)},
                    {"hi", num(s.hi)},
                    {"integral", num(s.integral)},
                    {"ratio_to_previous", num(s.ratio_to_previous)},
                    {"bound", num(s.bound)},
                    {"ok", s.ok}});
  return rows;
}

json report_json(const HoleFillingReport& r) {
  return {{"params",
           {{"p", num(r.params.p)},
            {"C", num(r.params.C)},
            {"R", num(r.params.R)},
            {"lambda0", num(r.params.lambda0)}}},
          {"S", num(r.S)},
          {"decay", num(r.decay)},
          {"eps0", num(r.eps0)},
          {"lp_norm_p", num(r.lp_norm_p)},
          {"shell_table", shells_json(r)},
          {"first_violation", r.first_violation},
          {"decay_pass", r.decay_pass},
          {"eps", num(r.eps)},
          {"lp_eps_estimate", num(r.lp_eps_estimate)},
          {"shell_majorant", num(r.shell_majorant)},
          {"geometric_majorant", num(r.geometric_majorant)},
          {"eps_in_guarantee", r.eps_in_guarantee},
          {"higher_norm_ok", r.higher_norm_ok},
          {"pass", r.pass}};
}

}  // namespace

std::string to_json(const HoleFillingReport& report, int indent) {
  return report_json(report).dump(indent);
}

std::string to_json(const ReverseFit& fit, int indent) {
  json rows = json::array();
  for (const auto& r : fit.rows)
    rows.push_back({{"lambda", num(r.lambda)},
                    {"lhs", num(r.lhs)},
                    {"divisor", num(r.divisor)},
                    {"ratio", num(r.ratio)},
                    {"empty", r.empty},
                    {"fail", r.fail}});
  json j = {{"C_fit", num(fit.C_fit)}, {"lambda0", num(fit.lambda0)}, {"pass", fit.pass},
            {"rows", rows}};
  return j.dump(indent);
}

std::string to_json(const TpReport& report, int indent) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"lambda", num(r.lambda)},
                    {"linf_ratio", num(r.linf_ratio)},
                    {"inclusion_violations", r.inclusion_violations},
                    {"residual", num(r.residual)},
                    {"bad_cells", r.bad_cells},
                    {"trivial", r.trivial},
                    {"within_budget", r.within_budget}});
  json j = {{"budget", num(report.budget)},
            {"max_linf_ratio", num(report.max_linf_ratio)},
            {"linf_spread", num(report.linf_spread)},
            {"pass", report.pass},
            {"rows", rows}};
  return j.dump(indent);
}

std::string to_json(const WeakTypeReport& report, int indent) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"lambda", num(r.lambda)},
                    {"measure_maximal_set", num(r.measure_maximal_set)},
                    {"integral_half_level", num(r.integral_half_level)},
                    {"ratio", num(r.ratio)},
                    {"skipped", r.skipped}});
  json j = {{"fitted_constant", num(report.fitted_constant)}, {"pass", report.pass}, {"rows", rows}};
  return j.dump(indent);
}

std::string to_json(const ExtensionReport& report, int indent) {
  json j = {{"residual", num(report.residual)},
            {"agreement_error", num(report.agreement_error)},
            {"ext2_constant", num(report.ext2_constant)},
            {"ext2_fail", report.ext2_fail},
            {"c1", num(report.c1)},
            {"c2", num(report.c2)},
            {"ext1_finite", report.ext1_finite},
            {"pointwise_max_ratio", num(report.pointwise_max_ratio)},
            {"pointwise_bound_ok", report.pointwise_bound_ok}};
  return j.dump(indent);
}

std::string to_json(const MinimiserRun& run, int indent) {
  json history = json::array();
  for (double v : run.history) history.push_back(num(v));
  json j = {{"objective", num(run.objective)},
            {"iterations", run.iterations},
            {"projected_grad_norm", num(run.projected_grad_norm)},
            {"kernel_residual", num(run.kernel_residual)},
            {"mean_error", num(run.mean_error)},
            {"converged", run.converged},
            {"monotone", run.monotone},
            {"history", history}};
  return j.dump(indent);
}

}  // namespace aflab
