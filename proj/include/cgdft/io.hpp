#pragma once

#include "cgdft/calculus.hpp"
#include "cgdft/kohn_sham.hpp"
#include "cgdft/multiscale.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cgdft {

/// Shortest round-trip-safe text at 17 significant digits, '.' decimal, no
/// locale; non-finite values print as inf, -inf, nan.
std::string format_scalar(Scalar x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Comma separated, '\n' line ends, header first.
    std::string str() const;
    /// Column index by name; throws InvalidArgument when missing.
    int column(const std::string& name) const;
};

std::string cell(Scalar x);
std::string cell(int x);
std::string cell(bool x);
inline std::string cell(const std::string& x) { return x; }

/// Parses the output of CsvTable::str (no quoting); throws Error on ragged rows.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Finite numbers as JSON numbers, the rest as the strings of format_scalar.
nlohmann::json json_scalar(Scalar x);
nlohmann::json json_vector(const Vector& v);

nlohmann::json to_json(const InversionResult& r, bool with_trace = true);
nlohmann::json to_json(const KsReport& r);

/// cell, center, target, lambda projection, potential.
CsvTable inversion_table(const InversionResult& r);
CsvTable trace_table(const InversionResult& r);
CsvTable quotient_table(const QuotientTrace& q);
CsvTable slice_table(const SliceReport& s);
/// One row per level plus a final "grid" row; `monotone` column is OK or VIOLATION.
CsvTable sweep_table(const ScaleSweep& sweep, Scalar monotonicity_tolerance);
CsvTable probe_table(const ProbeVerdict& verdict);
CsvTable quasi_table(const std::vector<QuasiContinuityRow>& rows);
CsvTable modulus_table(const std::vector<ModulusRow>& rows);
CsvTable oscillation_table(const OscillationTable& table);
CsvTable ks_table(const KsReport& r);

}  // namespace cgdft
