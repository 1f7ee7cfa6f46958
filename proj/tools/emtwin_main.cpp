#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "emtwin/commands.hpp"
#include "emtwin/errors.hpp"
#include "emtwin/kernels.hpp"
#include "emtwin/manifest.hpp"

namespace {

int apply_thread_cap() {
    const char* env = std::getenv("EMTWIN_THREADS");
    if (!env || !*env) return 0;
    try {
        std::size_t used = 0;
        const int n = std::stoi(env, &used);
        if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
        emtwin::kernels::set_max_threads(n);
    } catch (const std::exception&) {
        std::cerr << "emtwin: EMTWIN_THREADS must be a positive integer, got '" << env << "'\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace emtwin::cli;

    CLI::App app{"emtwin: digital twin of a flux-mediated optomechanical device"};
    app.set_version_flag("--version", emtwin::tool_version());
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", common.config, "device configuration JSON");
        if (need_config) c->required();
        sub->add_option("--seed", common.seed, "RNG seed (u64)");
        sub->add_option("--out", common.out, "output directory")->required();
    };

    FluxMapOptions flux;
    auto* flux_cmd = app.add_subcommand("flux-map", "resonance frequency and responsivity vs flux");
    add_common(flux_cmd, true);
    flux_cmd->add_option("--phi-min", flux.phi_min, "lowest reduced flux");
    flux_cmd->add_option("--phi-max", flux.phi_max, "highest reduced flux");
    flux_cmd->add_option("--points", flux.points, "number of flux points");
    flux_cmd->add_option("--fit", flux.fit_map, "measured map (b_ext_tesla,f_c_hz) to fit");

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic spectra and traces");
    add_common(synth_cmd, true);
    synth_cmd->add_option("--scenario", synth.scenario, "thermal | driven | driven-sweep");
    synth_cmd->add_option("--working-point", synth.working_point, "working point label");
    synth_cmd->add_option("--beta", synth.beta, "modulation index for the driven scenario");

    ExtractOptions extract;
    auto* extract_cmd = app.add_subcommand("extract", "calibrate g0 and force sensitivity from spectra");
    add_common(extract_cmd, true);
    extract_cmd->add_option("--psd", extract.psd, "voltage PSD CSV")->required();
    extract_cmd->add_option("--trace", extract.trace, "|S21|^2 trace CSV");
    extract_cmd->add_option("--working-point", extract.working_point, "working point label");

    BesselSweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("bessel-sweep", "fit amplitudes across a drive sweep");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--manifest", sweep.manifest, "sweep manifest JSON")->required();

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "render a result JSON as a markdown table");
    add_common(report_cmd, false);
    report_cmd->add_option("--input", report.input, "result JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (const int rc = apply_thread_cap()) return rc;

    try {
        std::vector<std::filesystem::path> written;
        if (*flux_cmd) written = cmd_flux_map(common, flux);
        else if (*synth_cmd) written = cmd_synth(common, synth);
        else if (*extract_cmd) written = cmd_extract(common, extract);
        else if (*sweep_cmd) written = cmd_bessel_sweep(common, sweep);
        else written = cmd_report(common, report);
        for (const auto& p : written) std::cout << p.string() << '\n';
        return 0;
    } catch (const emtwin::Error& e) {
        std::cerr << "emtwin: " << e.what() << '\n';
        return emtwin::exit_code(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "emtwin: IoError: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "emtwin: " << e.what() << '\n';
        return 1;
    }
}
