#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cpsb/config.hpp"
#include "cpsb/errors.hpp"
#include "cpsb/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config, "scenario config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "output directory for CSVs and the run manifest");
    cmd->add_option("--seed", a.seed, "offset added to every seed in the config")
        ->each([&a](const std::string&) { a.has_seed = true; });
}

cpsb::ScenarioConfig load_config(const CommonArgs& a) {
    cpsb::ScenarioConfig cfg = cpsb::load_scenario_config(a.config);
    if (a.has_seed) {
        for (auto& t : cfg.tasks)
            if (t.perturbation) t.perturbation->seed += a.seed;
        cfg.load.u.seed += a.seed;
        cfg.filter.pf.seed += a.seed;
        cfg.filter.meas_seed += a.seed;
    }
    return cfg;
}

std::string policy_name(const cpsb::Policy& p) {
    return p.kind == cpsb::PolicyKind::FixedPriority ? "fixed" : "edf";
}

void write_manifest(const CommonArgs& a, const cpsb::ScenarioConfig& cfg,
                    const std::string& command) {
    if (a.out.empty()) return;
    fs::create_directories(a.out);
    std::ofstream f(fs::path(a.out) / "manifest.txt", std::ios::binary);
    if (!f) throw cpsb::ConfigError("cannot open manifest for writing in " + a.out);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, cpsb::file_fnv1a64(a.config));
    f << "tool: cpsb " << cpsb::kVersion << "\n";
    f << "command: " << command << "\n";
    f << "config: " << a.config << "\n";
    f << "config_fnv1a64: " << hex << "\n";
    f << "policy: " << policy_name(cfg.policy) << "\n";
    f << "seed_offset: " << (a.has_seed ? a.seed : 0) << "\n";
    int idx = 0;
    for (const auto& t : cfg.tasks) {
        if (t.perturbation)
            f << "seed.task" << idx << ".perturbation: " << t.perturbation->seed << "\n";
        ++idx;
    }
    f << "seed.load.u: " << cfg.load.u.seed << "\n";
    f << "seed.filter: " << cfg.filter.pf.seed << "\n";
    f << "seed.measurement: " << cfg.filter.meas_seed << "\n";
    if (cfg.has_cycles) f << "seed.cycle_stride: " << cfg.cycles.seed_stride << "\n";
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw cpsb::ConfigError("cannot open output file: " + name);
    return f;
}

int cmd_simulate(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    const cpsb::AnalysisSetup setup = cpsb::prepare_analysis(cfg);
    const cpsb::SimResult sim =
        cpsb::simulate(setup.realized, cfg.t_a, cfg.t_b, setup.warm_realized, cfg.policy);
    if (!a.out.empty()) {
        auto wf = open_out(a.out, "windows.csv");
        cpsb::write_windows_csv(sim.windows, wf);
        auto mf = open_out(a.out, "modes.csv");
        cpsb::write_mode_trace_csv(sim.modes, mf);
    }
    write_manifest(a, cfg, "simulate");
    std::cout << "policy=" << policy_name(cfg.policy) << " windows=" << sim.windows.size()
              << " window_us=[" << cfg.t_a.us << "," << cfg.t_b.us << ")\n";
    return 0;
}

int cmd_schedtest(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    const cpsb::AnalysisSetup setup = cpsb::prepare_analysis(cfg);
    const cpsb::SchedReport report = cpsb::dynamic_schedulability_test(
        setup.realized, cfg.t_a, cfg.t_b, setup.warm_realized, cfg.policy);
    if (!a.out.empty()) {
        auto sf = open_out(a.out, "sched_report.csv");
        cpsb::write_sched_report_csv(report, sf);
    }
    write_manifest(a, cfg, "schedtest");
    if (report.schedulable) {
        std::cout << "schedulable=yes policy=" << policy_name(cfg.policy) << " windows="
                  << report.window_ends.size() << "\n";
        return 0;
    }
    std::cout << "schedulable=no policy=" << policy_name(cfg.policy) << " failures="
              << report.failures.size() << " first_failure_t_us="
              << report.failures.front().t_end.us << " first_failure_task="
              << report.failures.front().task + 1 << "\n";
    return 2;
}

int cmd_robustness(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    const cpsb::AnalysisSetup setup = cpsb::prepare_analysis(cfg);
    const cpsb::RobustnessReport report = cpsb::robustness_measure(
        setup.nominal, cfg.t_a, cfg.t_b, setup.warm_nominal, cfg.policy);
    if (!a.out.empty()) {
        auto rf = open_out(a.out, "robustness.csv");
        cpsb::write_robustness_csv(report, rf);
    }
    write_manifest(a, cfg, "robustness");
    std::cout << "B_R_us=" << report.br.us << " policy=" << policy_name(cfg.policy)
              << " binding_window=" << report.binding_window << " binding_task="
              << report.binding_task + 1 << " binding_instance=" << report.binding_instance
              << " t_end_us=" << report.binding_t_end.us << "\n";
    return 0;
}

int cmd_battery_run(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    if (!cfg.has_battery) throw cpsb::ConfigError("battery-run requires a battery block");
    if (!cfg.has_battery_run) throw cpsb::ConfigError("battery-run requires a battery_run block");
    const cpsb::BatteryRunConfig& br = cfg.battery_run;

    cpsb::IntegrateOptions opts;
    opts.step_check = cfg.sim.step_check;
    cpsb::BatteryIntegrator bat({br.x1_0, 0.0, 0.0}, 0.0, cfg.sim.h_inner_s, cfg.battery, opts);
    const cpsb::StabilityThresholds th = cpsb::thresholds(cfg.battery);
    const double c_c = cpsb::circuit_values(1.0, cfg.battery).c_c;
    const double floor_x1 = th.delta2 + std::max(cfg.sim.x1_stop_margin, 2e-4);

    cpsb::Trajectory traj;
    traj.points.push_back({0.0, bat.state(), bat.voltage(br.current_a), br.current_a});
    bool floored = false;
    for (std::int64_t k = 1; !floored; ++k) {
        const double t_next = br.sample_period_s * static_cast<double>(k);
        if (t_next > br.t_end_s + 0.5 * br.sample_period_s) break;
        const double dt = t_next - bat.time();
        if (bat.state().x1 - br.current_a * dt / c_c <= floor_x1) {
            floored = true;
            break;
        }
        bat.advance(t_next, br.current_a);
        traj.points.push_back({t_next, bat.state(), bat.voltage(br.current_a), br.current_a});
        if (bat.voltage(br.current_a) <= cfg.sim.voltage_cutoff_v) break;
    }
    if (!a.out.empty()) {
        auto tf = open_out(a.out, "trajectory.csv");
        cpsb::write_trajectory_csv(traj, tf);
    }
    write_manifest(a, cfg, "battery-run");
    const auto& last = traj.points.back();
    std::cout << "samples=" << traj.points.size() << " t_end_s=" << last.t << " x1_end="
              << last.state.x1 << " y_end_V=" << last.y
              << (floored ? " stopped=soc-floor" : "") << "\n";
    return 0;
}

void print_tallies(const cpsb::HarnessResult& hr) {
    const auto line = [](const char* name, const cpsb::OutcomeTally& t) {
        std::printf("%s: DR=%.0f%% FAR=%.0f%% MDR=%.0f%% (H=%d F=%d M=%d of T=%d)\n", name,
                    100.0 * t.dr(), 100.0 * t.far(), 100.0 * t.mdr(), t.h, t.f, t.m, t.t);
    };
    line("VT", hr.vt_tally);
    line("CT", hr.ct_tally);
    line("AT", hr.at_tally);
}

int cmd_compare_switching(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    const cpsb::HarnessResult hr = cpsb::run_cycles(cfg, a.out);
    write_manifest(a, cfg, "compare-switching");
    print_tallies(hr);
    return 0;
}

int cmd_run_scenario(const CommonArgs& a) {
    const cpsb::ScenarioConfig cfg = load_config(a);
    const cpsb::ScenarioResult result = cpsb::run_scenario(cfg, a.out);
    write_manifest(a, cfg, "run-scenario");
    if (result.sched)
        std::cout << "schedulable=" << (result.sched->schedulable ? "yes" : "no")
                  << " failures=" << result.sched->failures.size() << "\n";
    if (result.robustness) std::cout << "B_R_us=" << result.robustness->br.us << "\n";
    if (result.harness) print_tallies(*result.harness);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-simulation toolkit for battery-supported real-time systems"};
    app.require_subcommand(1);

    CommonArgs sim_a, sched_a, rob_a, bat_a, sw_a, scen_a;
    CLI::App* sim = app.add_subcommand(
        "simulate", "window-by-window task simulation: windows.csv, modes.csv");
    add_common(sim, sim_a);
    CLI::App* sched = app.add_subcommand(
        "schedtest", "exact schedulability test over the analysis window (exit 2 on failure)");
    add_common(sched, sched_a);
    CLI::App* rob = app.add_subcommand(
        "robustness", "robustness measure B_R of the nominal task set");
    add_common(rob, rob_a);
    CLI::App* bat = app.add_subcommand(
        "battery-run", "constant-current battery discharge: trajectory.csv");
    add_common(bat, bat_a);
    CLI::App* sw = app.add_subcommand(
        "compare-switching", "cycle harness scoring VT/CT/AT: tallies.csv, outcomes.csv");
    add_common(sw, sw_a);
    CLI::App* scen = app.add_subcommand(
        "run-scenario", "end-to-end pipeline: task analysis, load waveform, cycle harness");
    add_common(scen, scen_a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_a);
        if (sched->parsed()) return cmd_schedtest(sched_a);
        if (rob->parsed()) return cmd_robustness(rob_a);
        if (bat->parsed()) return cmd_battery_run(bat_a);
        if (sw->parsed()) return cmd_compare_switching(sw_a);
        if (scen->parsed()) return cmd_run_scenario(scen_a);
    } catch (const cpsb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
