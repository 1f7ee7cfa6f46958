#pragma once

// File formats: spectrum CSV + JSON sidecar, flux-map CSV, plain tables.
// Numbers are written with std::to_chars (shortest round-trip, '.' decimal point)
// so output never depends on the process locale.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emtwin/spectrum.hpp"
#include "emtwin/squid_resonator.hpp"

namespace emtwin::io {

namespace fs = std::filesystem;

std::string format_number(double v);
double parse_number(std::string_view text, std::string_view context);

std::string read_text(const fs::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const fs::path& path, std::string_view content);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    /// Comma-separated with header row.
    std::string to_csv() const;
    /// Tab-separated with header row, for plotting tools.
    std::string to_tsv() const;
};

/// Parses a headered numeric CSV. `expected` column names must appear in the header.
/// Errors carry "path:line: field" diagnostics.
Table read_csv(const fs::path& path, const std::vector<std::string>& expected);

/// Sidecar path for a spectrum file: foo.csv -> foo.json.
fs::path sidecar_path(const fs::path& csv);

/// Reads `f_hz,<value>` (value column `value` or `s21_sq`) plus the JSON sidecar
/// `{unit, enbw_hz, n_avg, seed?}` if one exists. Without a sidecar the trace is
/// dimensionless with n_avg = 1.
Spectrum read_spectrum(const fs::path& csv);

/// Writes the CSV and its sidecar atomically. Dimensionless traces use the
/// `s21_sq` column name, PSDs use `value`.
void write_spectrum(const fs::path& csv, const Spectrum& s, std::optional<std::uint64_t> seed = {});

/// `b_ext_tesla,f_c_hz` rows.
std::vector<FluxPoint> read_flux_map(const fs::path& csv);

}  // namespace emtwin::io
