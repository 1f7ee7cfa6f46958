#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "device_fixture.hpp"
#include "emtwin/errors.hpp"
#include "emtwin/fit_engine.hpp"

using namespace emtwin;

namespace {

constexpr double pi = std::numbers::pi;

// Solves the boundary condition independently: Newton on g(x) = x tan x - a,
// x = pi f / (2 f0), a = z0 / (4 f0 L).
double oracle_frequency(const ResonatorGeometry& g, double l_j) {
    const double a = g.z0 / (4.0 * g.f0_bare * l_j);
    double x = a < 1 ? std::sqrt(a) : pi / 2 - 1.0 / (a + 1.0);
    for (int i = 0; i < 100; ++i) {
        const double t = std::tan(x);
        const double step = (x * t - a) / (t + x * (1 + t * t));
        x -= step;
        if (std::abs(step) < 1e-16 * x) break;
    }
    return 2.0 * g.f0_bare * x / pi;
}

double phi_at_responsivity(double target) {
    double lo = 1e-3, hi = 0.45;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (-responsivity(fixture::geometry, fixture::squid, mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<FluxPoint> synthetic_map(double phi_edge, int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise);
    std::vector<FluxPoint> map;
    for (int i = 0; i < n; ++i) {
        const double phi = -phi_edge + 2.0 * phi_edge * i / (n - 1);
        const double b = fixture::axis.b_ext(phi);
        map.push_back({b, resonance_frequency(fixture::geometry, fixture::squid, phi) + (noise > 0 ? gauss(rng) : 0.0)});
    }
    return map;
}

}  // namespace

TEST_CASE("Josephson inductance") {
    const double l0 = josephson_inductance(fixture::squid, 0.0);
    CHECK(l0 == doctest::Approx(constants::Phi0 / (4 * pi * 0.44e-6)).epsilon(1e-14));
    CHECK(l0 == doctest::Approx(0.374e-9).epsilon(0.003));
    CHECK(josephson_inductance(fixture::squid, 1.0) == doctest::Approx(l0).epsilon(1e-12));
    CHECK(josephson_inductance(fixture::squid, 1.0 / 3.0) == doctest::Approx(2 * l0).epsilon(1e-12));
    CHECK_THROWS_AS(josephson_inductance(fixture::squid, 0.5), Error);

    const SquidParams asym{0.44e-6, 0.2};
    const double lmax = constants::Phi0 / (4 * pi * 0.44e-6 * 0.2);
    for (double phi = 0; phi <= 1.0; phi += 0.01) CHECK(josephson_inductance(asym, phi) <= lmax * (1 + 1e-12));
    CHECK(josephson_inductance(asym, 0.5) == doctest::Approx(lmax).epsilon(1e-12));
}

TEST_CASE("resonance frequency solves the boundary condition") {
    for (double phi : {0.0, 0.1, 0.25, 0.38, 0.45, 0.49}) {
        const double l = josephson_inductance(fixture::squid, phi);
        CHECK(resonance_frequency(fixture::geometry, fixture::squid, phi) ==
              doctest::Approx(oracle_frequency(fixture::geometry, l)).epsilon(1e-12));
    }
    const SquidParams strong{1.0, 0.0};
    CHECK(resonance_frequency(fixture::geometry, strong, 0.0) == doctest::Approx(fixture::geometry.f0_bare).epsilon(1e-6));
}

TEST_CASE("device flux map anchors") {
    CHECK(resonance_frequency(fixture::geometry, fixture::squid, 0.0) == doctest::Approx(7.45e9).epsilon(0.005));
    const double phi_k = phi_at_responsivity(6.6e9);
    CHECK(resonance_frequency(fixture::geometry, fixture::squid, phi_k) == doctest::Approx(6.887e9).epsilon(0.01));

    double best = 0;
    for (double phi = 0.001; phi < 0.48; phi += 0.001)
        best = std::max(best, std::abs(responsivity(fixture::geometry, fixture::squid, phi)));
    CHECK(best > 10e9);
}

TEST_CASE("flux map symmetry and monotonicity") {
    for (double phi = 0.01; phi < 0.5; phi += 0.01) {
        const double f = resonance_frequency(fixture::geometry, fixture::squid, phi);
        CHECK(resonance_frequency(fixture::geometry, fixture::squid, -phi) == doctest::Approx(f).epsilon(1e-13));
        CHECK(resonance_frequency(fixture::geometry, fixture::squid, phi + 1.0) == doctest::Approx(f).epsilon(1e-12));
        CHECK(resonance_frequency(fixture::geometry, fixture::squid, phi + 0.005) < f);
        CHECK(responsivity(fixture::geometry, fixture::squid, phi) < 0);
    }
    CHECK(responsivity(fixture::geometry, fixture::squid, 0.0) == 0.0);
}

TEST_CASE("responsivity matches a central difference") {
    const double h = 1e-5;
    const std::vector<SquidParams> squids{{0.44e-6, 0.0}, {0.8e-6, 0.1}, {0.2e-6, 0.3}};
    const std::vector<ResonatorGeometry> geoms{fixture::geometry, {6e9, 50.0}, {9e9, 120.0}};
    for (const auto& s : squids)
        for (const auto& g : geoms)
            for (double phi = 0.02; phi < 0.47; phi += 0.05) {
                const double fd = (resonance_frequency(g, s, phi + h) - resonance_frequency(g, s, phi - h)) / (2 * h);
                CHECK(responsivity(g, s, phi) == doctest::Approx(fd).epsilon(1e-6));
            }
}

TEST_CASE("coupling rate chain") {
    const double x = zero_point_fluctuation(fixture::mode);
    const double expected = 6.6e9 * 0.99 * 470e-6 * 20e-6 * x / constants::Phi0;
    CHECK(coupling_g0(6.6e9, 470e-6, fixture::mode) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(coupling_g0(6.6e9, 470e-6, fixture::mode) == doctest::Approx(1.40e3).epsilon(0.01));
    CHECK(coupling_g0(-6.6e9, -470e-6, fixture::mode) == coupling_g0(6.6e9, 470e-6, fixture::mode));
    const double slope = coupling_g0(6.6e9, 1.0, fixture::mode);
    CHECK(slope == doctest::Approx(2.97e6).epsilon(0.01));
    CHECK(coupling_g0(0.0, 470e-6, fixture::mode) == 0.0);
    CHECK(coupling_g0(6.6e9, 2 * 470e-6, fixture::mode) == 2 * coupling_g0(6.6e9, 470e-6, fixture::mode));
    CHECK(coupling_g0(2 * 6.6e9, 470e-6, fixture::mode) == 2 * coupling_g0(6.6e9, 470e-6, fixture::mode));
}

TEST_CASE("flux axis maps field onto working point K") {
    CHECK(fixture::axis.phi(-470e-6) == doctest::Approx(-0.38516571638456243).epsilon(1e-9));
    CHECK(fixture::axis.b_ext(fixture::axis.phi(3e-4)) == doctest::Approx(3e-4).epsilon(1e-12));
}

TEST_CASE("flux-map fit: noiseless recovery") {
    const auto map = synthetic_map(0.42, 81, 0.0, 1);
    const SquidParams s0{0.5e-6, 0.0};
    const ResonatorGeometry g0{7.9e9, fixture::geometry.z0};
    const FluxAxis a0{0.0, 1.6e-12};
    const FluxMapFit fit = fit_flux_map(map, g0, s0, a0);
    CHECK(fit.squid.i_c == doctest::Approx(fixture::squid.i_c).epsilon(1e-6));
    CHECK(fit.geometry.f0_bare == doctest::Approx(fixture::geometry.f0_bare).epsilon(1e-6));
    CHECK(fit.axis.area_eff == doctest::Approx(fixture::axis.area_eff).epsilon(1e-6));
    CHECK(fit.axis.offset == doctest::Approx(fixture::axis.offset).epsilon(1e-6));
}

TEST_CASE("flux-map fit: 1 MHz noise within three standard errors") {
    const auto map = synthetic_map(0.42, 121, 1e6, 42);
    const FluxMapFit fit = fit_flux_map(map, {7.9e9, fixture::geometry.z0}, {0.5e-6, 0.0}, {0.0, 1.6e-12});
    CHECK(std::abs(fit.squid.i_c - fixture::squid.i_c) < 3 * fit.i_c_err);
    CHECK(std::abs(fit.geometry.f0_bare - fixture::geometry.f0_bare) < 3 * fit.f0_bare_err);
    CHECK(std::abs(fit.axis.offset - fixture::axis.offset) < 3 * fit.offset_err);
    CHECK(std::abs(fit.axis.area_eff - fixture::axis.area_eff) < 3 * fit.area_eff_err);
    CHECK(fit.residual_rms == doctest::Approx(1e6).epsilon(0.2));
}

TEST_CASE("flux-map fit: digitized-style map returns the junction current") {
    // 7.45 GHz at the top, 6.7 GHz at the map edge, coarse 5 MHz read-off noise
    const double edge = 0.40843;
    CHECK(resonance_frequency(fixture::geometry, fixture::squid, edge) == doctest::Approx(6.7e9).epsilon(0.001));
    const auto map = synthetic_map(edge, 41, 5e6, 7);
    const FluxMapFit fit = fit_flux_map(map, {7.6e9, fixture::geometry.z0}, {0.3e-6, 0.0}, {0.0, 1.5e-12});
    CHECK(fit.squid.i_c == doctest::Approx(0.44e-6).epsilon(0.15));
}

TEST_CASE("flux-map fit error contract") {
    const auto narrow = synthetic_map(0.1, 40, 0.0, 1);
    CHECK_THROWS_AS(fit_flux_map(narrow, fixture::geometry, fixture::squid, fixture::axis), Error);
    try {
        fit_flux_map(narrow, fixture::geometry, fixture::squid, fixture::axis);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientSpan);
    }
    const auto sparse = synthetic_map(0.4, 6, 0.0, 1);
    CHECK_THROWS_AS(fit_flux_map(sparse, fixture::geometry, fixture::squid, fixture::axis), Error);

    // z0 and i_c enter only as a product: fitting both is singular
    const auto map = synthetic_map(0.42, 81, 1e5, 3);
    FluxMapFitOptions both;
    both.fit_z0 = true;
    CHECK_THROWS_AS(fit_flux_map(map, {7.9e9, 200.0}, {0.5e-6, 0.0}, {0.0, 1.6e-12}, both), fit::SingularFit);
}
