#pragma once

// Workflows behind the `emtwin` subcommands. Each returns the list of files it
// wrote; failures surface as emtwin::Error and map to exit codes in the tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emtwin::cli {

namespace fs = std::filesystem;

struct CommonOptions {
    fs::path config;
    std::uint64_t seed = 0;
    fs::path out = ".";
};

struct FluxMapOptions {
    std::optional<double> phi_min;
    std::optional<double> phi_max;
    std::optional<int> points;
    std::optional<fs::path> fit_map;  // measured b_ext_tesla,f_c_hz table to fit
};

struct SynthOptions {
    std::string scenario = "thermal";  // thermal | driven | driven-sweep
    std::optional<std::string> working_point;
    double beta = 5.0;  // driven scenario
};

struct ExtractOptions {
    fs::path psd;
    std::optional<fs::path> trace;
    std::string working_point = "K";
};

struct BesselSweepOptions {
    fs::path manifest;
};

struct ReportOptions {
    fs::path input;
};

std::vector<fs::path> cmd_flux_map(const CommonOptions& common, const FluxMapOptions& opts);
std::vector<fs::path> cmd_synth(const CommonOptions& common, const SynthOptions& opts);
std::vector<fs::path> cmd_extract(const CommonOptions& common, const ExtractOptions& opts);
std::vector<fs::path> cmd_bessel_sweep(const CommonOptions& common, const BesselSweepOptions& opts);
std::vector<fs::path> cmd_report(const CommonOptions& common, const ReportOptions& opts);

}  // namespace emtwin::cli
