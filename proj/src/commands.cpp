#include "emtwin/commands.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "emtwin/bessel.hpp"
#include "emtwin/calibration.hpp"
#include "emtwin/config.hpp"
#include "emtwin/errors.hpp"
#include "emtwin/io.hpp"
#include "emtwin/kernels.hpp"
#include "emtwin/lineshape.hpp"
#include "emtwin/manifest.hpp"
#include "emtwin/spectra.hpp"
#include "emtwin/squid_resonator.hpp"

namespace emtwin::cli {

using nlohmann::json;

namespace {

// nlohmann writes NaN/inf as null, which is what the report schema expects.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

RunManifest start_manifest(const std::string& command, const CommonOptions& common) {
    RunManifest m;
    m.command = command;
    m.config_path = common.config.string();
    m.seed = common.seed;
    m.tool_version = tool_version();
    m.timestamp = utc_timestamp();
    if (!common.config.empty()) m.add_input(common.config);
    return m;
}

struct Outputs {
    fs::path dir;
    std::vector<fs::path> written;

    fs::path add(const std::string& name) {
        written.push_back(dir / name);
        return written.back();
    }
    void finish(RunManifest& m, const std::string& name) {
        const fs::path path = dir / name;
        for (const auto& p : written) m.outputs.push_back(p.lexically_relative(dir).generic_string());
        m.write(path);
        written.push_back(path);
    }
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    // distinct, reproducible seeds per generated file
    return seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
}

Spectrum make_trace(std::vector<double> f, std::vector<double> values) {
    Spectrum s;
    s.f = std::move(f);
    s.values = std::move(values);
    s.unit = SpectrumUnit::Dimensionless;
    s.enbw = s.size() > 1 ? s.max_spacing() : 0.0;
    return s;
}

double driven_span(const DriveSettings& d, const LineshapeParams& line, double beta_max, double f_m) {
    if (d.span > 0) return d.span;
    return (beta_max + 4.0) * f_m + 2.0 * line.kappa();
}

Spectrum driven_trace(const LineshapeParams& line, double beta, double f_m, double span, int points) {
    std::vector<double> delta = linspace(-span, span, static_cast<std::size_t>(points));
    std::vector<double> clean = s21_driven_trace(delta, line, beta, f_m, required_orders(beta));
    for (double& d : delta) d += line.f_c;
    return make_trace(std::move(delta), std::move(clean));
}

struct BackAction {
    double n_cav = 0;
    double gamma_em = 0;
    double n_th = 0;
    double n_eff = 0;
};

BackAction back_action(const DeviceConfig& cfg, const WorkingPoint& wp, const LineshapeParams& line, double g0) {
    BackAction b;
    b.n_th = thermal_occupation(cfg.mode.f_m(), cfg.temperature);
    if (wp.probe_power > 0) b.n_cav = photon_number({line.f_c + wp.detuning, wp.probe_power, wp.detuning}, line);
    b.gamma_em = gamma_em(g0, b.n_cav, line, wp.detuning, cfg.mode.f_m());
    b.n_eff = effective_occupation(b.n_th, cfg.mode.gamma_m(), b.gamma_em);
    return b;
}

}  // namespace

std::vector<fs::path> cmd_flux_map(const CommonOptions& common, const FluxMapOptions& opts) {
    const DeviceConfig cfg = load_config(common.config);
    const double lo = opts.phi_min.value_or(cfg.flux_map.phi_min);
    const double hi = opts.phi_max.value_or(cfg.flux_map.phi_max);
    const int n = opts.points.value_or(cfg.flux_map.points);
    if (n < 1) throw Error(Errc::InvalidArgument, "--points must be at least 1");
    if (n > 1 && !(hi > lo)) throw Error(Errc::InvalidArgument, "--phi-max must exceed --phi-min");

    const std::vector<double> phi = linspace(lo, hi, static_cast<std::size_t>(n));
    std::vector<double> f_c(phi.size()), resp(phi.size());
    std::vector<std::uint8_t> divergent(phi.size());
    kernels::omp::flux_sweep(cfg.geometry, cfg.squid, phi, f_c, resp, divergent);

    io::Table table;
    table.columns = {"phi", "f_c_hz", "responsivity_hz_per_phi0", "divergent"};
    std::size_t n_div = 0, i_max = 0, i_resp = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        table.rows.push_back({phi[i], f_c[i], resp[i], static_cast<double>(divergent[i])});
        if (divergent[i]) {
            ++n_div;
            continue;
        }
        if (divergent[i_max] || f_c[i] > f_c[i_max]) i_max = i;
        if (divergent[i_resp] || std::abs(resp[i]) > std::abs(resp[i_resp])) i_resp = i;
    }

    json report = {{"command", "flux-map"},
                   {"tool_version", tool_version()},
                   {"phi_min", lo},
                   {"phi_max", hi},
                   {"points", n},
                   {"divergent_points", n_div}};
    if (n_div < phi.size()) {
        report["f_c_max_hz"] = f_c[i_max];
        report["phi_at_f_c_max"] = phi[i_max];
        report["max_abs_responsivity_hz_per_phi0"] = std::abs(resp[i_resp]);
        report["phi_at_max_responsivity"] = phi[i_resp];
    }

    RunManifest manifest = start_manifest("flux-map", common);
    if (opts.fit_map) {
        manifest.add_input(*opts.fit_map);
        const std::vector<FluxPoint> map = io::read_flux_map(*opts.fit_map);
        const FluxMapFit fit = fit_flux_map(map, cfg.geometry, cfg.squid, cfg.flux_axis);
        report["fit"] = {{"i_c_a", fit.squid.i_c},
                         {"i_c_err_a", num(fit.i_c_err)},
                         {"f0_bare_hz", fit.geometry.f0_bare},
                         {"f0_bare_err_hz", num(fit.f0_bare_err)},
                         {"z0_ohm_fixed", fit.geometry.z0},
                         {"offset_wb", fit.axis.offset},
                         {"offset_err_wb", num(fit.offset_err)},
                         {"area_eff_m2", fit.axis.area_eff},
                         {"area_eff_err_m2", num(fit.area_eff_err)},
                         {"residual_rms_hz", fit.residual_rms},
                         {"iterations", fit.iterations}};
    }

    Outputs out{common.out, {}};
    io::write_text_atomic(out.add("flux_map.csv"), table.to_csv());
    io::write_text_atomic(out.add("flux_map_report.json"), report.dump(2) + "\n");
    out.finish(manifest, "flux_map_manifest.json");
    return out.written;
}

std::vector<fs::path> cmd_synth(const CommonOptions& common, const SynthOptions& opts) {
    if (opts.scenario != "thermal" && opts.scenario != "driven" && opts.scenario != "driven-sweep")
        throw Error(Errc::InvalidArgument, "unknown scenario '" + opts.scenario +
                                               "' (expected thermal, driven or driven-sweep)");
    const DeviceConfig cfg = load_config(common.config);
    RunManifest manifest = start_manifest("synth", common);
    Outputs out{common.out, {}};
    const double f_m = cfg.mode.f_m();

    if (opts.scenario == "thermal") {
        const std::string label = opts.working_point.value_or("K");
        const WorkingPoint& wp = cfg.working_point(label);
        const double g0 = cfg.g0_at(label);
        const BackAction ba = back_action(cfg, wp, wp.line, g0);
        const MechanicalMode eff = cfg.mode.with_gamma(cfg.mode.gamma_m() + ba.gamma_em);
        const auto& aq = cfg.acquisition;
        const auto n_bins = static_cast<std::size_t>(std::llround(2.0 * aq.span / aq.enbw)) + 1;
        const std::vector<double> f = linspace(f_m - aq.span, f_m + aq.span, n_bins);
        const Spectrum clean = suu_forward(f, aq.enbw, g0, eff, {cfg.temperature, ba.n_eff}, cfg.tone, cfg.chain);
        const Spectrum noisy = synthesize_noise(clean, aq.n_avg, stream_seed(common.seed, 0));
        io::write_spectrum(out.add("psd_clean.csv"), clean);
        out.add("psd_clean.json");
        io::write_spectrum(out.add("psd_noisy.csv"), noisy, common.seed);
        out.add("psd_noisy.json");

        const double ts = aq.trace_span > 0 ? aq.trace_span : 4.0 * wp.line.kappa();
        std::vector<double> ft = linspace(wp.line.f_c - ts, wp.line.f_c + ts, static_cast<std::size_t>(aq.trace_points));
        std::vector<double> s21(ft.size());
        for (std::size_t i = 0; i < ft.size(); ++i) s21[i] = s21_squared(ft[i] - wp.line.f_c, wp.line);
        const Spectrum trace = make_trace(std::move(ft), std::move(s21));
        io::write_spectrum(out.add("s21_clean.csv"), trace);
        out.add("s21_clean.json");
        io::write_spectrum(out.add("s21_noisy.csv"), add_gaussian_noise(trace, 0.002, stream_seed(common.seed, 1)),
                           common.seed);
        out.add("s21_noisy.json");

        const json truth = {{"scenario", "thermal"},   {"working_point", label},
                            {"g0_hz", g0},             {"n_th", ba.n_th},
                            {"n_eff", ba.n_eff},       {"n_cav", ba.n_cav},
                            {"gamma_em_hz", ba.gamma_em}, {"gamma_m_eff_hz", eff.gamma_m()}};
        io::write_text_atomic(out.add("synth_truth.json"), truth.dump(2) + "\n");
    } else if (opts.scenario == "driven") {
        const std::string label = opts.working_point.value_or(cfg.drive.working_point);
        const LineshapeParams& line = cfg.working_point(label).line;
        if (!(opts.beta >= 0)) throw Error(Errc::InvalidArgument, "--beta must be non-negative");
        const double span = driven_span(cfg.drive, line, opts.beta, f_m);
        const Spectrum clean = driven_trace(line, opts.beta, f_m, span, cfg.drive.points);
        io::write_spectrum(out.add("driven_clean.csv"), clean);
        out.add("driven_clean.json");
        io::write_spectrum(out.add("driven_noisy.csv"),
                           add_gaussian_noise(clean, cfg.drive.noise_sigma, stream_seed(common.seed, 0)),
                           common.seed);
        out.add("driven_noisy.json");
        const json truth = {{"scenario", "driven"}, {"working_point", label}, {"beta", opts.beta}};
        io::write_text_atomic(out.add("synth_truth.json"), truth.dump(2) + "\n");
    } else {
        const DriveSettings& d = cfg.drive;
        if (d.v_piezo.empty()) throw Error(Errc::InvalidArgument, "drive.v_piezo_v is empty");
        if (!(d.x0_per_sqrt_volt > 0)) throw Error(Errc::InvalidArgument, "drive.x0_per_sqrt_volt_m must be positive");
        const std::string label = opts.working_point.value_or(d.working_point);
        const LineshapeParams& line = cfg.working_point(label).line;
        const double g0 = d.g0.value_or(cfg.g0_at(label));
        const double x_zpf = zero_point_fluctuation(cfg.mode);
        double v_max = 0;
        for (double v : d.v_piezo) v_max = std::max(v_max, v);
        const double span = driven_span(d, line, modulation_index(g0, d.x0_per_sqrt_volt * std::sqrt(v_max), x_zpf, f_m), f_m);

        json list = json::array();
        for (std::size_t i = 0; i < d.v_piezo.size(); ++i) {
            const double x0 = d.x0_per_sqrt_volt * std::sqrt(d.v_piezo[i]);
            const double beta = modulation_index(g0, x0, x_zpf, f_m);
            const Spectrum clean = driven_trace(line, beta, f_m, span, d.points);
            char name[32];
            std::snprintf(name, sizeof name, "traces/trace_%03zu.csv", i);
            io::write_spectrum(out.add(name), add_gaussian_noise(clean, d.noise_sigma, stream_seed(common.seed, i)),
                               common.seed);
            out.add(fs::path(name).replace_extension(".json").generic_string());
            list.push_back({{"v_piezo_v", d.v_piezo[i]}, {"path", name}, {"x0_true_m", x0}, {"beta_true", beta}});
        }
        const json sweep = {{"working_point", label}, {"g0_hz", g0}, {"traces", list}};
        io::write_text_atomic(out.add("sweep.json"), sweep.dump(2) + "\n");
    }
    out.finish(manifest, "synth_manifest.json");
    return out.written;
}

std::vector<fs::path> cmd_extract(const CommonOptions& common, const ExtractOptions& opts) {
    const DeviceConfig cfg = load_config(common.config);
    RunManifest manifest = start_manifest("extract", common);
    Outputs out{common.out, {}};
    const WorkingPoint& wp = cfg.working_point(opts.working_point);
    const MechanicalMode& mode = cfg.mode;

    json report = {{"schema_version", 1},
                   {"command", "extract"},
                   {"tool_version", tool_version()},
                   {"working_point", opts.working_point},
                   {"inputs", {{"psd", opts.psd.string()}, {"trace", opts.trace ? json(opts.trace->string()) : json(nullptr)}}},
                   {"resonance", nullptr}};

    LineshapeParams line = wp.line;
    if (opts.trace) {
        manifest.add_input(*opts.trace);
        const Spectrum trace = io::read_spectrum(*opts.trace);
        ResonanceFitOptions ro;
        ro.mechanical_frequency = mode.f_m();
        const ResonanceFit rf = fit_resonance(trace, guess_resonance(trace), ro);
        line = rf.params;
        report["resonance"] = {{"f_c_hz", rf.params.f_c},
                               {"f_c_err_hz", num(rf.f_c_err)},
                               {"kappa_ext_hz", rf.params.kappa_ext},
                               {"kappa_int_hz", rf.params.kappa_int},
                               {"kappa_hz", rf.params.kappa()},
                               {"kappa_err_hz", num(rf.kappa_err)},
                               {"background", rf.background},
                               {"residual_rms", rf.residual_rms},
                               {"coupling_ambiguous", rf.coupling_ambiguous},
                               {"resolved_sideband", rf.resolved_sideband ? json(*rf.resolved_sideband) : json(nullptr)},
                               {"alternate", {{"kappa_ext_hz", rf.alternate.kappa_ext}, {"kappa_int_hz", rf.alternate.kappa_int}}}};
        io::Table t;
        t.columns = {"f_hz", "s21_sq", "fit_s21_sq"};
        for (std::size_t i = 0; i < trace.size(); ++i)
            t.rows.push_back({trace.f[i], trace.values[i], rf.background * s21_squared(trace.f[i] - line.f_c, line)});
        io::write_text_atomic(out.add("resonance_fit.tsv"), t.to_tsv());
    }

    manifest.add_input(opts.psd);
    const Spectrum psd = io::read_spectrum(opts.psd);

    // g0 sets the optical spring, which sets n_eff, which scales the inferred g0:
    // iterate to self-consistency.
    BackAction ba = back_action(cfg, wp, line, 0.0);
    GZeroResult g;
    int iterations = 0;
    for (; iterations < 50; ++iterations) {
        g = extract_g0(psd, cfg.tone, ba.n_eff, cfg.chain.transfer_ratio_Y,
                       PeakHint{mode.f_m(), mode.gamma_m() + ba.gamma_em});
        const BackAction next = back_action(cfg, wp, line, g.g0);
        const bool done = std::abs(next.n_eff - ba.n_eff) <= 1e-12 * ba.n_eff;
        ba = next;
        if (done) break;
    }
    g = extract_g0(psd, cfg.tone, ba.n_eff, cfg.chain.transfer_ratio_Y,
                   PeakHint{mode.f_m(), mode.gamma_m() + ba.gamma_em});

    const MechanicalMode eff = mode.with_gamma(g.gamma_m_fit > 0 && g.gamma_m_fit < mode.f_m() / 10
                                                   ? g.gamma_m_fit
                                                   : mode.gamma_m() + ba.gamma_em);
    const DisplacementSpectrum dx = suu_to_sxx(psd, g.g0, eff, cfg.chain, g.floor);
    const Spectrum sff = force_sensitivity(dx.sxx, eff);
    const std::size_t k = sff.nearest_bin(g.f_m_fit > 0 ? g.f_m_fit : mode.f_m());

    report["g0"] = {{"value_hz", g.g0}, {"std_err_hz", num(g.std_err)}, {"peak_significant", g.peak_significant}};
    report["mechanical"] = {{"f_m_hz", g.f_m_fit},
                            {"gamma_m_fit_hz", g.gamma_m_fit},
                            {"gamma_m_intrinsic_hz", mode.gamma_m()},
                            {"n_th", ba.n_th},
                            {"n_eff", ba.n_eff},
                            {"n_cav", ba.n_cav},
                            {"gamma_em_hz", ba.gamma_em},
                            {"backaction_iterations", iterations + 1}};
    report["calibration"] = {{"f_mod_hz", cfg.tone.f_mod},
                             {"phi0_rad", cfg.tone.phi0},
                             {"transfer_ratio_y", cfg.chain.transfer_ratio_Y},
                             {"cal_excess_v2_per_hz", g.cal_excess},
                             {"peak_area_v2", g.area},
                             {"peak_area_err_v2", num(g.area_err)},
                             {"floor_v2_per_hz", g.floor}};
    report["force"] = {{"sqrt_sff_on_resonance_n_per_sqrt_hz", std::sqrt(sff.values[k])},
                       {"sqrt_sff_thermal_n_per_sqrt_hz", std::sqrt(thermal_force_psd(cfg.temperature, eff))},
                       {"clipped_bins", dx.clipped}};

    io::Table p;
    p.columns = {"f_hz", "suu_v2_per_hz", "fit_v2_per_hz"};
    for (std::size_t i = 0; i < psd.size(); ++i)
        p.rows.push_back({psd.f[i], psd.values[i], g.floor + g.area * lorentzian(psd.f[i], g.f_m_fit, g.gamma_m_fit)});
    io::Table fz;
    fz.columns = {"f_hz", "sxx_m2_per_hz", "sff_n2_per_hz"};
    for (std::size_t i = 0; i < sff.size(); ++i) fz.rows.push_back({sff.f[i], dx.sxx.values[i], sff.values[i]});
    io::write_text_atomic(out.add("psd_fit.tsv"), p.to_tsv());
    io::write_text_atomic(out.add("force_sensitivity.tsv"), fz.to_tsv());

    json plots = json::array();
    for (const auto& w : out.written) plots.push_back(w.filename().string());
    report["plots"] = plots;
    io::write_text_atomic(out.add("report.json"), report.dump(2) + "\n");
    out.finish(manifest, "extract_manifest.json");
    return out.written;
}

std::vector<fs::path> cmd_bessel_sweep(const CommonOptions& common, const BesselSweepOptions& opts) {
    const DeviceConfig cfg = load_config(common.config);
    RunManifest manifest = start_manifest("bessel-sweep", common);
    manifest.add_input(opts.manifest);
    json sweep;
    try {
        sweep = json::parse(io::read_text(opts.manifest));
    } catch (const json::parse_error& e) {
        throw Error(Errc::Parse, opts.manifest.string() + ": " + e.what());
    }
    if (!sweep.contains("traces") || !sweep["traces"].is_array() || sweep["traces"].empty())
        throw Error(Errc::InvalidArgument, opts.manifest.string() + ": sweep manifest lists no traces");

    const std::string label = sweep.value("working_point", cfg.drive.working_point);
    const LineshapeParams& line = cfg.working_point(label).line;
    const double g0 = sweep.contains("g0_hz") ? sweep["g0_hz"].get<double>() : cfg.drive.g0.value_or(cfg.g0_at(label));

    std::vector<DriveSweep> traces;
    const fs::path base = opts.manifest.parent_path();
    for (const auto& t : sweep["traces"]) {
        if (!t.contains("v_piezo_v") || !t.contains("path"))
            throw Error(Errc::Parse, opts.manifest.string() + ": each trace needs v_piezo_v and path");
        const fs::path p = base / t["path"].get<std::string>();
        manifest.add_input(p);
        traces.push_back({t["v_piezo_v"].get<double>(), io::read_spectrum(p)});
    }
    const SweepResult res = fit_sweep(traces, line, g0, cfg.mode);

    io::Table table;
    table.columns = {"v_piezo", "x0_m", "x0_err_m", "n_phon"};
    std::vector<double> v, x;
    for (const auto& row : res.rows) {
        table.rows.push_back({row.v_piezo, row.fit.x0, row.fit.x0_err, row.n_phon});
        v.push_back(row.v_piezo);
        x.push_back(row.fit.x0);
    }
    json summary = {{"command", "bessel-sweep"},
                    {"tool_version", tool_version()},
                    {"working_point", label},
                    {"g0_hz", g0},
                    {"fitted", res.rows.size()},
                    {"regression", nullptr}};
    json failures = json::array();
    for (const auto& f : res.failures) failures.push_back({{"v_piezo", f.v_piezo}, {"error", f.error}});
    summary["failures"] = failures;
    if (res.rows.size() >= 3) {
        const PowerLawFit pl = power_law_regression(v, x);
        summary["regression"] = {{"exponent", pl.exponent},
                                 {"exponent_err", num(pl.exponent_err)},
                                 {"prefactor_m", pl.prefactor},
                                 {"r_squared", pl.r_squared},
                                 {"n", pl.n}};
    }

    Outputs out{common.out, {}};
    io::write_text_atomic(out.add("amplitude_vs_drive.csv"), table.to_csv());
    io::write_text_atomic(out.add("amplitude_vs_drive_summary.json"), summary.dump(2) + "\n");
    out.finish(manifest, "bessel_sweep_manifest.json");
    return out.written;
}

namespace {
void flatten(const json& j, const std::string& prefix, std::string& text) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), text);
    } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", text);
    } else {
        std::string value;
        if (j.is_number_float())
            value = io::format_number(j.get<double>());
        else if (j.is_string())
            value = j.get<std::string>();
        else
            value = j.dump();
        text += "| " + prefix + " | " + value + " |\n";
    }
}
}  // namespace

std::vector<fs::path> cmd_report(const CommonOptions& common, const ReportOptions& opts) {
    json j;
    try {
        j = json::parse(io::read_text(opts.input));
    } catch (const json::parse_error& e) {
        throw Error(Errc::Parse, opts.input.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(Errc::Parse, opts.input.string() + ": expected a JSON object");
    std::string text = "# " + j.value("command", std::string("emtwin")) + " report\n\n";
    text += "Source: `" + opts.input.filename().string() + "`\n\n| key | value |\n|---|---|\n";
    flatten(j, "", text);

    RunManifest manifest = start_manifest("report", common);
    manifest.add_input(opts.input);
    Outputs out{common.out, {}};
    fs::path name = opts.input.filename();
    name.replace_extension(".md");
    io::write_text_atomic(out.add(name.string()), text);
    out.finish(manifest, "report_manifest.json");
    return out.written;
}

}  // namespace emtwin::cli
