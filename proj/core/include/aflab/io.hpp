#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aflab/constraint.hpp"
#include "aflab/extension.hpp"
#include "aflab/holefill.hpp"
#include "aflab/integrands.hpp"
#include "aflab/maximal.hpp"
#include "aflab/minimise.hpp"
#include "aflab/torus_field.hpp"
#include "aflab/truncation.hpp"

namespace aflab {

/// Binary field: int64 LE dim, resolution, channels, then float64 LE values in
/// storage order. A JSON sidecar `<path>.json` repeats the header.
void write_field(const std::filesystem::path& path, const Field& u);
Field read_field(const std::filesystem::path& path);

/// Shortest round-trip decimal; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

struct Table {
  std::vector<std::string> comments;  // written as "# ..." lines
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const Table& table);
std::string to_csv(const Table& table);

Table level_set_table(const std::vector<LevelSetStats>& stats);
Table weak_type_table(const WeakTypeReport& report);
Table reverse_fit_table(const ReverseFit& fit);
Table shell_table(const HoleFillingReport& report);
Table tp_table(const TpReport& report);
Table comparison_table(const std::vector<ComparisonRow>& rows);
Table mean_comparison_table(const std::vector<MeanComparisonRow>& rows);
Table domain_table(const std::vector<DomainRow>& rows);

/// Operator JSON: either a built-in name string or
/// {"n", "m", "l", "scheme"?, "coefficients": [{"alpha": [..], "matrix": [[..]]}]}.
DifferentialOperator parse_operator(const std::string& json_text);
/// A built-in name or a path to an operator JSON file.
DifferentialOperator load_operator(const std::string& name_or_file);
std::string operator_to_json(const DifferentialOperator& op);

/// Integrand JSON: {"name": ..., "p", "nu", "bands", "axis", "b", "K"} (all but name optional).
Integrand parse_integrand(const std::string& json_text, int grid_dim, int channels);
Integrand load_integrand(const std::string& name_or_file, int grid_dim, int channels);

/// Run-length mask JSON: {"dim", "resolution", "start": bool, "runs": [lengths...]}.
std::string mask_to_json(const DomainMask& mask);
DomainMask parse_mask(const std::string& json_text);
DomainMask load_mask(const std::filesystem::path& path);

std::string to_json(const HoleFillingReport& report, int indent = 2);
std::string to_json(const ReverseFit& fit, int indent = 2);
std::string to_json(const TpReport& report, int indent = 2);
std::string to_json(const WeakTypeReport& report, int indent = 2);
std::string to_json(const ExtensionReport& report, int indent = 2);
std::string to_json(const MinimiserRun& run, int indent = 2);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace aflab
