#include "emtwin/config.hpp"

#include <cmath>
#include <json.hpp>

#include "emtwin/errors.hpp"
#include "emtwin/io.hpp"

namespace emtwin {

using nlohmann::json;

namespace {

struct Reader {
    const std::string& origin;

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        throw Error(Errc::Parse, origin + ": " + path + ": " + what);
    }

    const json& child(const json& j, const std::string& path, const char* key) const {
        if (!j.is_object()) fail(path, "expected an object");
        const auto it = j.find(key);
        if (it == j.end()) fail(path + "." + key, "missing field");
        return *it;
    }

    double number(const json& j, const std::string& path, const char* key) const {
        const json& v = child(j, path, key);
        if (!v.is_number()) fail(path + "." + key, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path + "." + key, "must be finite");
        return x;
    }

    double number_or(const json& j, const std::string& path, const char* key, double fallback) const {
        return j.contains(key) ? number(j, path, key) : fallback;
    }

    std::optional<double> maybe_number(const json& j, const std::string& path, const char* key) const {
        if (!j.contains(key)) return std::nullopt;
        return number(j, path, key);
    }

    int integer_or(const json& j, const std::string& path, const char* key, int fallback) const {
        if (!j.contains(key)) return fallback;
        const json& v = j.at(key);
        if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
        return v.get<int>();
    }

    // Runs `fn`, rewriting model validation failures as diagnostics on `path`.
    template <class F>
    auto checked(const std::string& path, F&& fn) const {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.code() == Errc::Parse) throw;
            fail(path, e.what());
        }
    }
};

std::string syntax_location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const WorkingPoint& DeviceConfig::working_point(const std::string& label) const {
    const auto it = working_points.find(label);
    if (it == working_points.end()) throw Error(Errc::InvalidArgument, "unknown working point '" + label + "'");
    return it->second;
}

double DeviceConfig::g0_at(const std::string& label) const {
    const WorkingPoint& wp = working_point(label);
    if (wp.g0) return *wp.g0;
    const double resp = responsivity(geometry, squid, flux_axis.phi(wp.b_ext));
    return coupling_g0(resp, wp.b_ext, mode);
}

DeviceConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw Error(Errc::Parse, origin + ": JSON syntax error at " + syntax_location(text, e.byte) + ": " +
                                     e.what());
    }
    const Reader r{origin};
    DeviceConfig cfg;

    const json& sq = r.child(root, "$", "squid");
    cfg.squid = {r.number(sq, "squid", "i_c_a"), r.number_or(sq, "squid", "asymmetry_d", 0.0)};
    r.checked("squid", [&] { cfg.squid.validate(); });

    const json& geo = r.child(root, "$", "geometry");
    cfg.geometry = {r.number(geo, "geometry", "f0_bare_hz"), r.number(geo, "geometry", "z0_ohm")};
    r.checked("geometry", [&] { cfg.geometry.validate(); });

    const json& ax = r.child(root, "$", "flux_axis");
    cfg.flux_axis = {r.number(ax, "flux_axis", "offset_wb"), r.number(ax, "flux_axis", "area_eff_m2")};
    r.checked("flux_axis", [&] { cfg.flux_axis.validate(); });

    const json& md = r.child(root, "$", "mode");
    cfg.mode = r.checked("mode", [&] {
        return MechanicalMode(r.number(md, "mode", "f_m_hz"), r.number(md, "mode", "gamma_m_hz"),
                              r.number(md, "mode", "m_eff_kg"), r.number(md, "mode", "length_m"),
                              r.number(md, "mode", "modeshape_factor"));
    });

    cfg.temperature = r.number(root, "$", "temperature_k");
    if (cfg.temperature <= 0) r.fail("temperature_k", "must be positive");

    const json& wps = r.child(root, "$", "working_points");
    if (!wps.is_object() || wps.empty()) r.fail("working_points", "expected a non-empty object");
    for (auto it = wps.begin(); it != wps.end(); ++it) {
        const std::string& label = it.key();
        const json& wj = it.value();
        const std::string path = "working_points." + label;
        WorkingPoint wp;
        wp.line = {r.number(wj, path, "f_c_hz"), r.number(wj, path, "kappa_ext_hz"),
                   r.number(wj, path, "kappa_int_hz")};
        r.checked(path, [&] { wp.line.validate(); });
        wp.b_ext = r.number_or(wj, path, "b_ext_tesla", 0.0);
        wp.g0 = r.maybe_number(wj, path, "g0_hz");
        wp.probe_power = r.number_or(wj, path, "probe_power_w", 0.0);
        wp.detuning = r.number_or(wj, path, "detuning_hz", 0.0);
        if (wp.probe_power < 0) r.fail(path + ".probe_power_w", "must be non-negative");
        cfg.working_points.emplace(label, wp);
    }

    const json& ch = r.child(root, "$", "chain");
    cfg.chain = {r.number(ch, "chain", "gain"), r.number(ch, "chain", "s_imp_v2_per_hz"),
                 r.number_or(ch, "chain", "transfer_ratio_y", 1.0)};
    r.checked("chain", [&] { cfg.chain.validate(); });

    const json& ct = r.child(root, "$", "calibration_tone");
    cfg.tone = {r.number(ct, "calibration_tone", "f_mod_hz"), r.number(ct, "calibration_tone", "phi0_rad")};
    r.checked("calibration_tone", [&] { cfg.tone.validate(); });

    if (root.contains("acquisition")) {
        const json& aq = root.at("acquisition");
        auto& a = cfg.acquisition;
        a.span = r.number_or(aq, "acquisition", "span_hz", a.span);
        a.enbw = r.number_or(aq, "acquisition", "enbw_hz", a.enbw);
        a.n_avg = r.integer_or(aq, "acquisition", "n_avg", a.n_avg);
        a.trace_span = r.number_or(aq, "acquisition", "trace_span_hz", a.trace_span);
        a.trace_points = r.integer_or(aq, "acquisition", "trace_points", a.trace_points);
        if (a.span <= 0) r.fail("acquisition.span_hz", "must be positive");
        if (a.enbw <= 0) r.fail("acquisition.enbw_hz", "must be positive");
        if (a.n_avg < 1) r.fail("acquisition.n_avg", "must be at least 1");
        if (a.trace_span < 0) r.fail("acquisition.trace_span_hz", "must be non-negative");
        if (a.trace_points < 8) r.fail("acquisition.trace_points", "must be at least 8");
    }

    if (root.contains("drive")) {
        const json& dj = root.at("drive");
        auto& d = cfg.drive;
        if (dj.contains("working_point")) {
            if (!dj.at("working_point").is_string()) r.fail("drive.working_point", "expected a string");
            d.working_point = dj.at("working_point").get<std::string>();
        }
        d.g0 = r.maybe_number(dj, "drive", "g0_hz");
        d.x0_per_sqrt_volt = r.number_or(dj, "drive", "x0_per_sqrt_volt_m", 0.0);
        d.span = r.number_or(dj, "drive", "span_hz", 0.0);
        d.points = r.integer_or(dj, "drive", "points", d.points);
        d.noise_sigma = r.number_or(dj, "drive", "noise_sigma", d.noise_sigma);
        if (dj.contains("v_piezo_v")) {
            const json& vs = dj.at("v_piezo_v");
            if (!vs.is_array()) r.fail("drive.v_piezo_v", "expected an array");
            for (std::size_t i = 0; i < vs.size(); ++i) {
                if (!vs[i].is_number() || vs[i].get<double>() <= 0)
                    r.fail("drive.v_piezo_v[" + std::to_string(i) + "]", "expected a positive number");
                d.v_piezo.push_back(vs[i].get<double>());
            }
        }
        if (d.x0_per_sqrt_volt < 0) r.fail("drive.x0_per_sqrt_volt_m", "must be non-negative");
        if (d.points < 16) r.fail("drive.points", "must be at least 16");
        if (d.noise_sigma < 0) r.fail("drive.noise_sigma", "must be non-negative");
        if (!cfg.working_points.count(d.working_point))
            r.fail("drive.working_point", "unknown working point '" + d.working_point + "'");
    }

    if (root.contains("flux_map")) {
        const json& fj = root.at("flux_map");
        auto& f = cfg.flux_map;
        f.phi_min = r.number_or(fj, "flux_map", "phi_min", f.phi_min);
        f.phi_max = r.number_or(fj, "flux_map", "phi_max", f.phi_max);
        f.points = r.integer_or(fj, "flux_map", "points", f.points);
        if (f.points < 1) r.fail("flux_map.points", "must be at least 1");
        if (f.points > 1 && !(f.phi_max > f.phi_min)) r.fail("flux_map.phi_max", "must exceed phi_min");
    }
    return cfg;
}

DeviceConfig load_config(const std::filesystem::path& path) {
    return parse_config(io::read_text(path), path.string());
}

}  // namespace emtwin
