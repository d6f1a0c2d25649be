#include "cpsb/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cpsb/errors.hpp"

namespace cpsb {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

template <typename T>
T req(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + "." + key + ": " + e.what());
    }
}

BatteryParams battery_from_json(const json& j, const std::string& ctx) {
    BatteryParams p;
    const auto kv = req<std::vector<double>>(j, "k", ctx);
    if (kv.size() != p.k.size())
        throw ConfigError(ctx + ".k: expected 21 coefficients, got " +
                          std::to_string(kv.size()));
    std::copy(kv.begin(), kv.end(), p.k.begin());
    p.c_ah = req<double>(j, "c_ah", ctx);
    p.f1 = get_or<double>(j, "f1", 1.0, ctx);
    p.f2 = get_or<double>(j, "f2", 1.0, ctx);
    p.validate();
    return p;
}

TaskSpecConfig task_from_json(const json& j, const std::string& ctx) {
    TaskSpecConfig spec;
    spec.first_arrival = Instant{req<std::int64_t>(j, "first_arrival_us", ctx)};
    if (j.contains("instances") && j.at("instances").is_array()) {
        for (const auto& pair : j.at("instances")) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError(ctx + ".instances: each entry must be [c_us, t_us]");
            spec.instances.emplace_back(Duration::micros(pair.at(0).get<std::int64_t>()),
                                        Duration::micros(pair.at(1).get<std::int64_t>()));
        }
        if (spec.instances.empty()) throw ConfigError(ctx + ".instances: empty list");
        return spec;
    }
    spec.c = Duration::micros(req<std::int64_t>(j, "c_us", ctx));
    spec.t = Duration::micros(req<std::int64_t>(j, "t_us", ctx));
    if (j.contains("perturbation")) {
        const json& pj = j.at("perturbation");
        PerturbationSpec ps;
        ps.lo = Duration::micros(req<std::int64_t>(pj, "lo_us", ctx + ".perturbation"));
        ps.hi = Duration::micros(req<std::int64_t>(pj, "hi_us", ctx + ".perturbation"));
        if (ps.hi < ps.lo) throw ConfigError(ctx + ".perturbation: hi_us < lo_us");
        ps.seed = req<std::uint64_t>(pj, "seed", ctx + ".perturbation");
        ps.instances = get_or<std::int64_t>(pj, "instances", 0, ctx + ".perturbation");
        spec.perturbation = ps;
    }
    return spec;
}

}  // namespace

BatteryParams load_battery_params(const std::string& path) {
    return battery_from_json(parse_file(path), path);
}

ScenarioConfig load_scenario_config(const std::string& path) {
    const json j = parse_file(path);
    const std::string ctx = path;
    ScenarioConfig cfg;

    if (j.contains("policy")) {
        const auto pol = j.at("policy").get<std::string>();
        if (pol == "fixed" || pol == "rms")
            cfg.policy = Policy::fixed();
        else if (pol == "edf")
            cfg.policy = Policy::edf();
        else
            throw ConfigError(ctx + ".policy: expected 'fixed' or 'edf', got '" + pol + "'");
    }

    if (j.contains("window")) {
        const json& w = j.at("window");
        cfg.t_a = Instant{req<std::int64_t>(w, "t_a_us", ctx + ".window")};
        cfg.t_b = Instant{req<std::int64_t>(w, "t_b_us", ctx + ".window")};
        if (!(cfg.t_a < cfg.t_b)) throw ConfigError(ctx + ".window: t_a_us must be < t_b_us");
        cfg.has_window = true;
    }

    if (j.contains("tasks")) {
        const json& ts = j.at("tasks");
        if (!ts.is_array() || ts.empty())
            throw ConfigError(ctx + ".tasks: expected a nonempty array");
        int idx = 0;
        for (const auto& tj : ts)
            cfg.tasks.push_back(task_from_json(tj, ctx + ".tasks[" + std::to_string(idx++) + "]"));
        cfg.has_tasks = true;
    }

    if (j.contains("battery")) {
        const json& b = j.at("battery");
        if (b.contains("file")) {
            std::filesystem::path ref = b.at("file").get<std::string>();
            if (ref.is_relative()) ref = std::filesystem::path(path).parent_path() / ref;
            cfg.battery = load_battery_params(ref.string());
        } else {
            cfg.battery = battery_from_json(b, ctx + ".battery");
        }
        cfg.has_battery = true;
        cfg.switching.v_initial = circuit_values(1.0, cfg.battery).e_o;
    }

    if (j.contains("load")) {
        const json& l = j.at("load");
        const std::string lc = ctx + ".load";
        cfg.load.p_a_per_unit = get_or<double>(l, "p_a_per_unit", cfg.load.p_a_per_unit, lc);
        cfg.load.ip1_base_a = get_or<double>(l, "ip1_base_a", cfg.load.ip1_base_a, lc);
        cfg.load.ip1_active_delta_a =
            get_or<double>(l, "ip1_active_delta_a", cfg.load.ip1_active_delta_a, lc);
        cfg.load.ip2_a = get_or<double>(l, "ip2_a", cfg.load.ip2_a, lc);
        if (cfg.load.p_a_per_unit < 0 || cfg.load.ip1_base_a < 0 ||
            cfg.load.ip1_active_delta_a < 0 || cfg.load.ip2_a < 0)
            throw ConfigError(lc + ": currents and P must be nonnegative");
        if (l.contains("u")) {
            const json& u = l.at("u");
            cfg.load.u.mode = get_or<std::string>(u, "mode", "constant", lc + ".u");
            if (cfg.load.u.mode != "constant" && cfg.load.u.mode != "synthetic")
                throw ConfigError(lc + ".u.mode: expected 'constant' or 'synthetic'");
            cfg.load.u.value = get_or<double>(u, "value", 0.0, lc + ".u");
            cfg.load.u.seed = get_or<std::uint64_t>(u, "seed", cfg.load.u.seed, lc + ".u");
            cfg.load.u.update_period = Duration::micros(get_or<std::int64_t>(
                u, "update_period_us", cfg.load.u.update_period.us, lc + ".u"));
            cfg.load.u.amplitude = get_or<double>(u, "amplitude", 1.0, lc + ".u");
            if (cfg.load.u.value < 0 || cfg.load.u.amplitude < 0 ||
                cfg.load.u.update_period.us <= 0)
                throw ConfigError(lc + ".u: amplitude/value nonnegative, period positive");
        }
        if (l.contains("miss_spike")) {
            const json& s = l.at("miss_spike");
            cfg.load.miss_spike.amplitude_a =
                get_or<double>(s, "amplitude_a", 3.5, lc + ".miss_spike");
            cfg.load.miss_spike.duration = Duration::micros(
                get_or<std::int64_t>(s, "duration_us", 500000, lc + ".miss_spike"));
            if (cfg.load.miss_spike.amplitude_a < 0 || cfg.load.miss_spike.duration.us < 0)
                throw ConfigError(lc + ".miss_spike: amplitude and duration must be nonnegative");
        }
    }

    if (j.contains("filter")) {
        const json& f = j.at("filter");
        const std::string fc = ctx + ".filter";
        cfg.filter.pf.m = get_or<int>(f, "m", cfg.filter.pf.m, fc);
        cfg.filter.h_s = get_or<double>(f, "h_s", cfg.filter.h_s, fc);
        const auto ps = get_or<std::vector<double>>(
            f, "proc_std",
            {cfg.filter.pf.proc_std_x1, cfg.filter.pf.proc_std_x2, cfg.filter.pf.proc_std_x3}, fc);
        if (ps.size() != 3) throw ConfigError(fc + ".proc_std: expected 3 values");
        cfg.filter.pf.proc_std_x1 = ps[0];
        cfg.filter.pf.proc_std_x2 = ps[1];
        cfg.filter.pf.proc_std_x3 = ps[2];
        cfg.filter.pf.meas_std = get_or<double>(f, "meas_std", cfg.filter.pf.meas_std, fc);
        cfg.filter.pf.seed = get_or<std::uint64_t>(f, "seed", cfg.filter.pf.seed, fc);
        const auto prs = get_or<std::vector<double>>(
            f, "prior_std", {cfg.filter.prior_std.begin(), cfg.filter.prior_std.end()}, fc);
        if (prs.size() != 3) throw ConfigError(fc + ".prior_std: expected 3 values");
        std::copy(prs.begin(), prs.end(), cfg.filter.prior_std.begin());
        cfg.filter.meas_seed = get_or<std::uint64_t>(f, "meas_seed", cfg.filter.meas_seed, fc);
        if (cfg.filter.pf.m < 1 || cfg.filter.h_s <= 0 || cfg.filter.pf.meas_std <= 0)
            throw ConfigError(fc + ": m >= 1, h_s > 0, meas_std > 0 required");
        const double h_us = cfg.filter.h_s * 1e6;
        if (std::abs(h_us - std::llround(h_us)) > 1e-6 || std::llround(h_us) < 1)
            throw ConfigError(fc + ".h_s: must be a whole number of microseconds");
    }

    if (j.contains("switching")) {
        const json& s = j.at("switching");
        const std::string sc = ctx + ".switching";
        cfg.switching.v_trigger = get_or<double>(s, "v_trigger", cfg.switching.v_trigger, sc);
        cfg.switching.soc_trigger =
            get_or<double>(s, "soc_trigger", cfg.switching.soc_trigger, sc);
        cfg.switching.v_false_alarm =
            get_or<double>(s, "v_false_alarm", cfg.switching.v_false_alarm, sc);
        cfg.switching.drop_fraction =
            get_or<double>(s, "drop_fraction", cfg.switching.drop_fraction, sc);
        if (s.contains("v_initial"))
            cfg.switching.v_initial = s.at("v_initial").get<double>();
        if (cfg.switching.drop_fraction <= 0 || cfg.switching.drop_fraction >= 1)
            throw ConfigError(sc + ".drop_fraction: must be in (0, 1)");
    }

    if (j.contains("cycles")) {
        const json& c = j.at("cycles");
        const std::string cc = ctx + ".cycles";
        cfg.cycles.mode = get_or<std::string>(c, "mode", cfg.cycles.mode, cc);
        if (cfg.cycles.mode != "tasks" && cfg.cycles.mode != "constant")
            throw ConfigError(cc + ".mode: expected 'tasks' or 'constant'");
        cfg.cycles.f2 = req<std::vector<double>>(c, "f2", cc);
        if (cfg.cycles.f2.empty()) throw ConfigError(cc + ".f2: empty list");
        for (const double v : cfg.cycles.f2)
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError(cc + ".f2: values must be in (0, 1]");
        cfg.cycles.currents_a = get_or<std::vector<double>>(c, "currents_a", {}, cc);
        if (cfg.cycles.mode == "constant") {
            if (cfg.cycles.currents_a.empty())
                throw ConfigError(cc + ".currents_a: required for constant mode");
            for (const double v : cfg.cycles.currents_a)
                if (!(v > 0.0)) throw ConfigError(cc + ".currents_a: currents must be positive");
        }
        cfg.cycles.seed_stride =
            get_or<std::uint64_t>(c, "seed_stride", cfg.cycles.seed_stride, cc);
        cfg.has_cycles = true;
    }

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        const std::string sc = ctx + ".sim";
        cfg.sim.h_inner_s = get_or<double>(s, "h_inner_s", cfg.sim.h_inner_s, sc);
        cfg.sim.step_check = get_or<bool>(s, "step_check", cfg.sim.step_check, sc);
        cfg.sim.voltage_cutoff_v =
            get_or<double>(s, "voltage_cutoff_v", cfg.sim.voltage_cutoff_v, sc);
        cfg.sim.x1_stop_margin =
            get_or<double>(s, "x1_stop_margin", cfg.sim.x1_stop_margin, sc);
        if (cfg.sim.h_inner_s <= 0 || cfg.sim.x1_stop_margin < 0)
            throw ConfigError(sc + ": h_inner_s > 0 and x1_stop_margin >= 0 required");
    }

    if (j.contains("battery_run")) {
        const json& b = j.at("battery_run");
        const std::string bc = ctx + ".battery_run";
        cfg.battery_run.current_a = req<double>(b, "current_a", bc);
        cfg.battery_run.t_end_s = req<double>(b, "t_end_s", bc);
        cfg.battery_run.x1_0 = get_or<double>(b, "x1_0", 1.0, bc);
        cfg.battery_run.sample_period_s = get_or<double>(b, "sample_period_s", 1.0, bc);
        if (cfg.battery_run.t_end_s <= 0 || cfg.battery_run.sample_period_s <= 0 ||
            cfg.battery_run.x1_0 < 0 || cfg.battery_run.x1_0 > 1)
            throw ConfigError(bc + ": t_end_s/sample_period_s positive, x1_0 in [0, 1]");
        cfg.has_battery_run = true;
    }

    return cfg;
}

TaskSet build_task_set(const std::vector<TaskSpecConfig>& specs, std::int64_t min_instances,
                       std::uint64_t seed_offset) {
    TaskSet ts;
    int idx = 0;
    for (const TaskSpecConfig& spec : specs) {
        if (!spec.instances.empty()) {
            ts.tasks.push_back(TaskTrace::from_instances(idx, spec.first_arrival, spec.instances));
        } else if (spec.perturbation) {
            const PerturbationSpec& p = *spec.perturbation;
            const std::int64_t count = std::max(p.instances, min_instances);
            ts.tasks.push_back(TaskTrace::perturbed(idx, spec.first_arrival, spec.c, spec.t, p.lo,
                                                    p.hi, p.seed + seed_offset, count));
        } else {
            ts.tasks.push_back(TaskTrace::periodic(idx, spec.first_arrival, spec.c, spec.t));
        }
        ++idx;
    }
    return ts;
}

Instant common_origin(const std::vector<TaskSpecConfig>& specs) {
    if (specs.empty()) throw ConfigError("task list is empty");
    const Instant origin = specs.front().first_arrival;
    for (const TaskSpecConfig& spec : specs)
        if (spec.first_arrival != origin)
            throw ConfigError("all tasks must share one first arrival (the simulation origin)");
    return origin;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t file_fnv1a64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for hashing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace cpsb
