#include <doctest.h>

#include <clocale>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>

#include "emtwin/config.hpp"
#include "emtwin/errors.hpp"
#include "emtwin/io.hpp"
#include "emtwin/manifest.hpp"

using namespace emtwin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "emtwin_io_test";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string shipped_config() { return io::read_text(fs::path(EMTWIN_SOURCE_DIR) / "configs/device.json"); }

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an emtwin::Error");
    return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("numbers round-trip without locale influence") {
    std::setlocale(LC_ALL, "de_DE.UTF-8");  // harmless if unavailable
    for (double v : {0.1, 6.887e9, -2.541294570833538e-18, 1e-300, 123456789.125}) {
        const std::string s = io::format_number(v);
        CHECK(s.find(',') == std::string::npos);
        CHECK(io::parse_number(s, "t") == v);
    }
    std::setlocale(LC_ALL, "C");
    CHECK(code_of([] { io::parse_number("1,5", "x"); }) == Errc::Parse);
    CHECK(std::isnan(io::parse_number("nan", "x")));
}

TEST_CASE("spectrum CSV and sidecar round-trip") {
    Spectrum s;
    s.f = linspace(6.0e6, 6.001e6, 11);
    for (std::size_t i = 0; i < s.size(); ++i) s.values.push_back(1e-13 * (1.0 + 0.1 * static_cast<double>(i)));
    s.unit = SpectrumUnit::VoltsSquaredPerHz;
    s.enbw = 100;
    s.n_avg = 50;
    const fs::path p = scratch("psd.csv");
    io::write_spectrum(p, s, 77);
    CHECK(fs::exists(io::sidecar_path(p)));
    const Spectrum back = io::read_spectrum(p);
    CHECK(back.f == s.f);
    CHECK(back.values == s.values);
    CHECK(back.unit == s.unit);
    CHECK(back.enbw == s.enbw);
    CHECK(back.n_avg == 50);
    CHECK(io::read_text(p).rfind("f_hz,value\n", 0) == 0);

    Spectrum t = s;
    t.unit = SpectrumUnit::Dimensionless;
    for (double& v : t.values) v = 0.5;
    const fs::path q = scratch("trace.csv");
    io::write_spectrum(q, t);
    CHECK(io::read_text(q).rfind("f_hz,s21_sq\n", 0) == 0);
    fs::remove(io::sidecar_path(q));
    CHECK(io::read_spectrum(q).unit == SpectrumUnit::Dimensionless);
}

TEST_CASE("CSV diagnostics name the line and field") {
    const fs::path p = scratch("bad.csv");
    write(p, "b_ext_tesla,f_c_hz\n0.001,7e9\n0.002,oops\n");
    try {
        io::read_flux_map(p);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Parse);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        CHECK(std::string(e.what()).find("f_c_hz") != std::string::npos);
    }
    write(p, "b,f\n1,2\n");
    CHECK(code_of([&] { io::read_flux_map(p); }) == Errc::Parse);
    write(p, "b_ext_tesla,f_c_hz\n1,2,3\n");
    CHECK(code_of([&] { io::read_flux_map(p); }) == Errc::Parse);
    CHECK(code_of([] { io::read_text("/nonexistent/file.csv"); }) == Errc::Io);
}

TEST_CASE("shipped configuration") {
    const DeviceConfig cfg = parse_config(shipped_config());
    CHECK(cfg.squid.i_c == 0.44e-6);
    CHECK(cfg.mode.f_m() == 6.34311e6);
    CHECK(cfg.mode.gamma_m() == 33.6);
    CHECK(cfg.tone.phi0 == 3.94e-4);
    CHECK(cfg.working_points.count("K") == 1);
    CHECK(cfg.working_points.count("D") == 1);
    CHECK(cfg.working_point("D").line.kappa() == doctest::Approx(2.5e6));
    CHECK(cfg.g0_at("K") == 1620.0);
    CHECK(resonance_frequency(cfg.geometry, cfg.squid, cfg.flux_axis.phi(cfg.working_point("K").b_ext)) ==
          doctest::Approx(6.887e9).epsilon(1e-3));
    CHECK(cfg.drive.v_piezo.size() == 20);
    CHECK(code_of([&] { cfg.working_point("Z"); }) == Errc::InvalidArgument);
}

TEST_CASE("configuration diagnostics") {
    std::string text = shipped_config();
    auto broken = [&](const std::string& from, const std::string& to) {
        std::string t = text;
        const auto pos = t.find(from);
        REQUIRE(pos != std::string::npos);
        t.replace(pos, from.size(), to);
        return t;
    };
    auto message = [](const std::string& t) {
        try {
            parse_config(t, "cfg.json");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::Parse);
            return std::string(e.what());
        }
        FAIL("expected a parse error");
        return std::string();
    };
    CHECK(message(broken("\"gamma_m_hz\": 33.6", "\"gamma_m_hz\": \"fast\"")).find("mode.gamma_m_hz") != std::string::npos);
    CHECK(message(broken("\"gamma_m_hz\": 33.6", "\"gamma_m_hz\": 1e6")).find("mode") != std::string::npos);
    CHECK(message(broken("\"i_c_a\"", "\"i_c\"")).find("squid.i_c_a") != std::string::npos);
    CHECK(message(broken("\"phi0_rad\": 0.000394", "\"phi0_rad\": 0.5")).find("calibration_tone") != std::string::npos);
    const std::string syntax = message(broken("\"temperature_k\": 0.185,", "\"temperature_k\": 0.185,,"));
    CHECK(syntax.find("line ") != std::string::npos);
    CHECK(syntax.find("column ") != std::string::npos);
}

TEST_CASE("manifest hashing and timestamps") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    setenv("SOURCE_DATE_EPOCH", "86400", 1);
    CHECK(utc_timestamp() == "1970-01-02T00:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
    const fs::path p = scratch("input.txt");
    write(p, "abc");
    RunManifest m;
    m.add_input(p);
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].bytes == 3);
    CHECK(m.inputs[0].sha256 == sha256_hex("abc"));
}
