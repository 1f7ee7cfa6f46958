#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace emtwin {

enum class SpectrumUnit {
    VoltsSquaredPerHz,
    MetresSquaredPerHz,
    HzSquaredPerHz,
    NewtonsSquaredPerHz,
    Dimensionless,
};

std::string_view to_string(SpectrumUnit unit);
/// Accepts the names produced by to_string ("V^2/Hz", "m^2/Hz", ...). Throws Parse.
SpectrumUnit parse_spectrum_unit(std::string_view text);

/// Sampled one-sided PSD or |S21|^2 trace on a strictly increasing frequency axis.
struct Spectrum {
    std::vector<double> f;       // Hz
    std::vector<double> values;  // per `unit`
    SpectrumUnit unit = SpectrumUnit::Dimensionless;
    double enbw = 0;  // Hz per bin; may be 0 for dimensionless traces
    int n_avg = 1;

    std::size_t size() const { return f.size(); }
    bool is_psd() const { return unit != SpectrumUnit::Dimensionless; }

    /// Throws InvalidArgument on length mismatch, non-increasing axis, negative
    /// PSD values, n_avg < 1, or (for PSDs) enbw below the largest bin spacing.
    void validate() const;

    double max_spacing() const;
    /// Index of the bin whose centre is closest to `freq`.
    std::size_t nearest_bin(double freq) const;
    bool contains(double freq) const;
};

/// Uniform axis of `n` points from `start` to `stop` inclusive.
std::vector<double> linspace(double start, double stop, std::size_t n);

}  // namespace emtwin
