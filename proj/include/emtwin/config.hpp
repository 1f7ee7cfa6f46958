#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emtwin/calibration.hpp"
#include "emtwin/lineshape.hpp"
#include "emtwin/spectra.hpp"
#include "emtwin/squid_resonator.hpp"
#include "emtwin/units.hpp"

namespace emtwin {

struct WorkingPoint {
    LineshapeParams line;
    double b_ext = 0;            // T
    std::optional<double> g0;    // Hz; derived from the flux model when absent
    double probe_power = 0;      // W
    double detuning = 0;         // Hz, probe minus cavity
};

struct Acquisition {
    double span = 3000;     // Hz either side of f_m
    double enbw = 5;        // Hz
    int n_avg = 50;
    double trace_span = 0;  // Hz either side of f_c for |S21|^2 traces; 0 means 4 kappa
    int trace_points = 801;
};

struct DriveSettings {
    std::string working_point = "D";
    std::optional<double> g0;  // Hz
    double x0_per_sqrt_volt = 0;  // m / sqrt(V)
    std::vector<double> v_piezo;  // V
    double span = 0;               // Hz either side of f_c; 0 picks from the largest beta
    int points = 2001;
    double noise_sigma = 0.01;
};

struct FluxMapSettings {
    double phi_min = -0.5;
    double phi_max = 0.5;
    int points = 1001;
};

struct DeviceConfig {
    SquidParams squid;
    ResonatorGeometry geometry;
    FluxAxis flux_axis;
    MechanicalMode mode{1e6, 1, 1e-15, 1e-5, 1};
    double temperature = 0;  // K
    std::map<std::string, WorkingPoint> working_points;
    DetectionChain chain{1, 0, 1};
    CalibrationTone tone{0, 0};
    Acquisition acquisition;
    DriveSettings drive;
    FluxMapSettings flux_map;

    const WorkingPoint& working_point(const std::string& label) const;
    /// Working-point g0 if configured, otherwise from the flux model at its b_ext.
    double g0_at(const std::string& label) const;
};

/// Parses and validates a device configuration. Errors name the JSON path
/// (e.g. "mode.gamma_m_hz") or the line/column of a syntax error.
DeviceConfig parse_config(const std::string& text, const std::string& origin = "<config>");
DeviceConfig load_config(const std::filesystem::path& path);

}  // namespace emtwin
