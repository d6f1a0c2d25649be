#include "cpsb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cpsb/errors.hpp"
#include "cpsb/rng.hpp"
#include "cpsb/soc_estimator.hpp"

namespace cpsb {

namespace {

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::pair<Instant, Instant>> merge_intervals(
    std::vector<std::pair<Instant, Instant>> xs) {
    std::sort(xs.begin(), xs.end());
    std::vector<std::pair<Instant, Instant>> out;
    for (const auto& [b, e] : xs) {
        if (!(b < e)) continue;
        if (!out.empty() && b <= out.back().second)
            out.back().second = std::max(out.back().second, e);
        else
            out.emplace_back(b, e);
    }
    return out;
}

}  // namespace

PiecewiseConstant::PiecewiseConstant(std::vector<Instant> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.empty() || knots_.size() != values_.size())
        throw ConfigError("piecewise signal: need equally many knots and values, at least one");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (!(knots_[i - 1] < knots_[i]))
            throw ConfigError("piecewise signal: knots must be strictly increasing");
}

double PiecewiseConstant::at(Instant t) const {
    if (knots_.empty() || t < knots_.front())
        throw OutOfDomain("piecewise signal queried before its first knot");
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

PiecewiseConstant synthetic_u(Instant origin, Instant end, Duration period, double amplitude,
                              std::uint64_t seed) {
    if (period.us <= 0) throw ConfigError("u trace: update period must be positive");
    if (amplitude < 0) throw ConfigError("u trace: amplitude must be nonnegative");
    Rng rng(seed);
    std::vector<Instant> knots;
    std::vector<double> values;
    for (Instant t = origin; t < end; t += period) {
        knots.push_back(t);
        values.push_back(rng.uniform(0.0, amplitude));
    }
    if (knots.empty()) {
        knots.push_back(origin);
        values.push_back(rng.uniform(0.0, amplitude));
    }
    return {std::move(knots), std::move(values)};
}

PiecewiseConstant constant_signal(Instant origin, double value) {
    return {{origin}, {value}};
}

PiecewiseConstant pulse_train(Instant origin, const std::vector<Instant>& starts, Duration width,
                              double amplitude) {
    std::vector<std::pair<Instant, int>> edges;
    if (width.us > 0 && amplitude != 0.0) {
        for (const Instant s : starts) {
            if (s < origin) throw OutOfDomain("pulse before the signal origin");
            edges.emplace_back(s, +1);
            edges.emplace_back(s + width, -1);
        }
    }
    std::sort(edges.begin(), edges.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Instant> knots{origin};
    std::vector<double> values{0.0};
    int level = 0;
    std::size_t i = 0;
    while (i < edges.size()) {
        const Instant t = edges[i].first;
        int delta = 0;
        while (i < edges.size() && edges[i].first == t) delta += edges[i++].second;
        if (delta == 0) continue;
        level += delta;
        const double v = amplitude * level;
        if (t == knots.back())
            values.back() = v;
        else if (v != values.back()) {
            knots.push_back(t);
            values.push_back(v);
        }
    }
    return {std::move(knots), std::move(values)};
}

PiecewiseConstant intervals01(Instant origin,
                              const std::vector<std::pair<Instant, Instant>>& intervals) {
    const auto merged = merge_intervals(intervals);
    std::vector<Instant> knots{origin};
    std::vector<double> values{0.0};
    for (const auto& [b, e] : merged) {
        if (b < origin) throw OutOfDomain("busy interval before the signal origin");
        if (b == knots.back())
            values.back() = 1.0;
        else {
            knots.push_back(b);
            values.push_back(1.0);
        }
        knots.push_back(e);
        values.push_back(0.0);
    }
    return {std::move(knots), std::move(values)};
}

int cpu_activity(const ModeTrace& trace, Instant t) {
    if (t < trace.t_a || t >= trace.t_b)
        throw OutOfDomain("cpu activity queried outside the mode trace");
    for (int n = 0; n < static_cast<int>(trace.per_task.size()); ++n)
        if (trace.mode_at(n, t) != Mode::Free) return 1;
    return 0;
}

double load_current(const LoadModel& lm, const ModeTrace& trace, Instant t) {
    double u_sum = 0.0;
    for (const PiecewiseConstant& uj : lm.u) u_sum += uj.at(t);
    const double ip1 = lm.ip1_base + lm.ip1_active_delta * cpu_activity(trace, t);
    return lm.p * u_sum + ip1 + lm.ip2;
}

TimingSummary summarize_timing(const TaskSet& ts, Instant t_a, Instant t_b,
                               const SchedState& initial, const Policy& policy) {
    TimingSummary out;
    simulate_stream(ts, t_a, t_b, initial, policy, [&](const WindowRecord& w) {
        const auto r = residues(w.at_start, w.chars);
        Duration total{0};
        for (const Duration d : r) total += d;
        const Duration busy_len = std::min(total, w.l_f);
        if (busy_len.us > 0) {
            const Instant b = w.t_f;
            const Instant e = w.t_f + busy_len;
            if (!out.busy.empty() && out.busy.back().second == b)
                out.busy.back().second = e;
            else
                out.busy.emplace_back(b, e);
        }
        const Instant t_end = w.t_f + w.l_f;
        for (int n = 0; n < static_cast<int>(w.chars.c.size()); ++n) {
            if (w.at_end.q[n].us == 0 && window_schedulable(n, w.at_end, w.chars.c[n]) == 0) {
                out.misses.push_back(t_end);
                out.schedulable = false;
            }
        }
    });
    return out;
}

double CurrentSchedule::at(Instant t) const {
    if (knots.empty() || t < knots.front() || t >= end)
        throw OutOfDomain("current schedule queried outside its domain");
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    return amps[static_cast<std::size_t>(it - knots.begin()) - 1];
}

CurrentSchedule sum_current(Instant origin, Instant end, double base,
                            const std::vector<std::pair<const PiecewiseConstant*, double>>& parts) {
    if (!(origin < end)) throw ConfigError("current schedule: window must be nonempty");
    for (const auto& [sig, scale] : parts) {
        if (sig->knots().empty()) throw ConfigError("current schedule: component has no knots");
        if (sig->knots().front() > origin)
            throw OutOfDomain("current schedule: component starts after the origin");
        (void)scale;
    }
    std::vector<Instant> all{origin};
    for (const auto& [sig, scale] : parts) {
        (void)scale;
        for (const Instant k : sig->knots())
            if (origin < k && k < end) all.push_back(k);
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    CurrentSchedule s;
    s.end = end;
    std::vector<std::size_t> cursor(parts.size(), 0);
    for (const Instant t : all) {
        double v = base;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            const auto& ks = parts[pi].first->knots();
            std::size_t& c = cursor[pi];
            while (c + 1 < ks.size() && ks[c + 1] <= t) ++c;
            v += parts[pi].second * parts[pi].first->values()[c];
        }
        if (!s.amps.empty() && v == s.amps.back()) continue;
        s.knots.push_back(t);
        s.amps.push_back(v);
    }
    return s;
}

void write_current_csv(const CurrentSchedule& schedule, std::ostream& out) {
    out << "t_us,i_A\n";
    for (std::size_t i = 0; i < schedule.knots.size(); ++i)
        out << schedule.knots[i].us << ',' << fmt_g(schedule.amps[i]) << '\n';
    out << schedule.end.us << ',' << fmt_g(schedule.amps.back()) << '\n';
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Hit: return "Hit";
        case Outcome::FalseAlarm: return "FalseAlarm";
        case Outcome::Miss: return "Miss";
    }
    return "?";
}

namespace {

// One shared battery + estimator pass observed by all three strategies.
CycleResult run_battery_cycle(int cycle_index0, const ScenarioConfig& cfg,
                              const BatteryParams& p_cycle, const CurrentSchedule& schedule,
                              Instant origin, std::int64_t miss_count,
                              const StabilityThresholds& th, Trajectory* traj_out,
                              std::vector<EstimatePoint>* est_out) {
    CycleResult res;
    res.cycle = cycle_index0 + 1;
    res.f2 = p_cycle.f2;
    res.miss_count = miss_count;

    const std::uint64_t bump =
        cfg.cycles.seed_stride * static_cast<std::uint64_t>(cycle_index0);
    PfConfig pfcfg = cfg.filter.pf;
    pfcfg.seed += bump;
    const BatteryState x0{1.0, 0.0, 0.0};
    const BatteryState prior_std{cfg.filter.prior_std[0], cfg.filter.prior_std[1],
                                 cfg.filter.prior_std[2]};
    SocParticleFilter pf(x0, prior_std, pfcfg, p_cycle);
    Rng meas_rng(cfg.filter.meas_seed + bump);

    IntegrateOptions opts;
    opts.step_check = cfg.sim.step_check;
    BatteryIntegrator bat(x0, origin.as_seconds(), cfg.sim.h_inner_s, p_cycle, opts);

    const double c_c = circuit_values(1.0, p_cycle).c_c;
    const std::int64_t h_us = std::llround(cfg.filter.h_s * 1e6);
    const double h_s = cfg.filter.h_s;
    // hard floor keeping the integrator away from the slow-branch capacitance
    // zero at delta2; checked against the exact linear SoC projection before
    // every advance, so no step can land below it
    const double floor_x1 = th.delta2 + std::max(cfg.sim.x1_stop_margin * 0.5, 2e-4);
    const double stop_x1 = th.delta2 + cfg.sim.x1_stop_margin;
    const SwitchRules& rules = cfg.switching;

    Instant pos = origin;
    std::size_t cur = 0;
    double i_used = schedule.amps.front();
    bool floored = false;

    if (traj_out)
        traj_out->points.push_back(
            {pos.as_seconds(), bat.state(), bat.voltage(i_used), i_used});

    for (std::int64_t k = 1;; ++k) {
        const Instant t_k = origin + Duration::micros(h_us * k);
        if (t_k > schedule.end) {
            res.stop_reason = "horizon";
            break;
        }
        while (pos < t_k) {
            while (cur + 1 < schedule.knots.size() && schedule.knots[cur + 1] <= pos) ++cur;
            const Instant seg_end = (cur + 1 < schedule.knots.size())
                                        ? std::min(schedule.knots[cur + 1], t_k)
                                        : t_k;
            const double i_seg = schedule.amps[cur];
            const double dt = static_cast<double>((seg_end - pos).us) * 1e-6;
            if (bat.state().x1 - i_seg * dt / c_c <= floor_x1) {
                floored = true;
                break;
            }
            bat.advance(seg_end.as_seconds(), i_seg);
            i_used = i_seg;
            pos = seg_end;
        }
        if (floored) {
            res.stop_reason = "soc-floor";
            break;
        }

        const double i_k = i_used;
        const double y_true = bat.voltage(i_k);
        const double y_meas = y_true + meas_rng.normal(0.0, cfg.filter.pf.meas_std);
        const Estimate est = pf.step(y_meas, i_k, h_s);

        if (traj_out) traj_out->points.push_back({pos.as_seconds(), bat.state(), y_true, i_k});
        if (est_out) est_out->push_back({pos.as_seconds(), est});

        if (!res.vt && vt_decide(y_meas, rules.v_trigger))
            res.vt = StrategyObservation{h_s * static_cast<double>(k), y_meas, est.x_hat.x1};
        if (!res.ct && ct_decide(est.x_hat.x1, rules.soc_trigger))
            res.ct = StrategyObservation{h_s * static_cast<double>(k), y_meas, est.x_hat.x1};
        if (!res.at) {
            const SwitchDecision d = at_decide(est, i_k, k, h_s, p_cycle);
            if (d.s == 1) res.at = StrategyObservation{*d.tau_s, y_meas, est.x_hat.x1};
        }

        if (res.vt && res.ct && res.at) {
            res.stop_reason = "all-triggered";
            break;
        }
        if (bat.state().x1 <= stop_x1) {
            res.stop_reason = "soc-floor";
            break;
        }
        if (y_true <= cfg.sim.voltage_cutoff_v) {
            res.stop_reason = "voltage-cutoff";
            break;
        }
    }

    res.end_time_s = bat.time();
    res.x1_end = bat.state().x1;
    res.vt_outcome = classify(Strategy::VoltageThreshold, res.vt, rules);
    res.ct_outcome = classify(Strategy::CapacityThreshold, res.ct, rules);
    res.at_outcome = classify(Strategy::AdaptiveThreshold, res.at, rules);
    return res;
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file: " + (dir / name).string());
    return f;
}

std::vector<TaskSpecConfig> strip_perturbations(const std::vector<TaskSpecConfig>& specs) {
    std::vector<TaskSpecConfig> out = specs;
    for (TaskSpecConfig& s : out) s.perturbation.reset();
    return out;
}

}  // namespace

HarnessResult run_cycles(const ScenarioConfig& cfg, const std::string& out_dir) {
    if (!cfg.has_battery) throw ConfigError("cycle harness requires a battery block");
    if (!cfg.has_cycles) throw ConfigError("cycle harness requires a cycles block");
    const bool tasks_mode = cfg.cycles.mode == "tasks";
    if (tasks_mode && !cfg.has_tasks)
        throw ConfigError("cycles.mode 'tasks' requires a tasks block");
    if (cfg.switching.v_initial <= 0.0)
        throw ConfigError("switching.v_initial is unset; provide a battery block or the value");

    namespace fs = std::filesystem;
    const bool files = !out_dir.empty();
    if (files) fs::create_directories(out_dir);

    HarnessResult hr;
    hr.th = thresholds(cfg.battery);
    const std::int64_t h_us = std::llround(cfg.filter.h_s * 1e6);

    std::vector<Outcome> vt_o, ct_o, at_o;
    for (int j = 0; j < static_cast<int>(cfg.cycles.f2.size()); ++j) {
        BatteryParams p_cycle = cfg.battery;
        p_cycle.f2 = cfg.cycles.f2[static_cast<std::size_t>(j)];
        p_cycle.validate();
        const double c_c = 3600.0 * p_cycle.c_ah * p_cycle.f1 * p_cycle.f2;

        CurrentSchedule schedule;
        Instant origin{0};
        std::int64_t miss_count = 0;

        if (!tasks_mode) {
            const double i_j =
                cfg.cycles.currents_a[static_cast<std::size_t>(j) % cfg.cycles.currents_a.size()];
            const double horizon_s = 1.10 * c_c / i_j + 10.0 * cfg.filter.h_s;
            const auto steps =
                static_cast<std::int64_t>(std::ceil(horizon_s * 1e6 / static_cast<double>(h_us)));
            schedule.knots = {origin};
            schedule.amps = {i_j};
            schedule.end = origin + Duration::micros(h_us * steps);
        } else {
            origin = common_origin(cfg.tasks);
            const double i_floor = cfg.load.ip1_base_a + cfg.load.ip2_a;
            if (i_floor <= 0.0)
                throw ConfigError("tasks-mode cycles need ip1_base_a + ip2_a > 0");
            const double horizon_s = 1.25 * c_c / i_floor;
            const auto steps =
                static_cast<std::int64_t>(std::ceil(horizon_s * 1e6 / static_cast<double>(h_us)));
            const Instant end = origin + Duration::micros(h_us * steps);

            std::int64_t min_inst = 0;
            for (const TaskSpecConfig& spec : cfg.tasks)
                if (spec.perturbation)
                    min_inst = std::max(min_inst, (end - origin).us / spec.t.us + 4);
            const std::uint64_t bump =
                cfg.cycles.seed_stride * static_cast<std::uint64_t>(j);
            const TaskSet ts = build_task_set(cfg.tasks, min_inst, bump);
            const TimingSummary timing =
                summarize_timing(ts, origin, end, SchedState::zero(ts.size()), cfg.policy);
            miss_count = static_cast<std::int64_t>(timing.misses.size());

            const PiecewiseConstant busy = intervals01(origin, timing.busy);
            const PiecewiseConstant spikes =
                pulse_train(origin, timing.misses, cfg.load.miss_spike.duration,
                            cfg.load.miss_spike.amplitude_a);
            std::array<PiecewiseConstant, 3> u;
            for (int c = 0; c < 3; ++c) {
                if (cfg.load.u.mode == "synthetic")
                    u[static_cast<std::size_t>(c)] = synthetic_u(
                        origin, end, cfg.load.u.update_period, cfg.load.u.amplitude,
                        cfg.load.u.seed + bump + 1000003ULL * static_cast<std::uint64_t>(c));
                else
                    u[static_cast<std::size_t>(c)] = constant_signal(origin, cfg.load.u.value);
            }
            schedule = sum_current(origin, end, cfg.load.ip1_base_a + cfg.load.ip2_a,
                                   {{&u[0], cfg.load.p_a_per_unit},
                                    {&u[1], cfg.load.p_a_per_unit},
                                    {&u[2], cfg.load.p_a_per_unit},
                                    {&busy, cfg.load.ip1_active_delta_a},
                                    {&spikes, 1.0}});
        }

        Trajectory traj;
        std::vector<EstimatePoint> est_points;
        CycleResult res =
            run_battery_cycle(j, cfg, p_cycle, schedule, origin, miss_count, hr.th,
                              files ? &traj : nullptr, files ? &est_points : nullptr);
        if (files) {
            char name[64];
            std::snprintf(name, sizeof(name), "cycle_%02d_trajectory.csv", j + 1);
            auto tf = open_out(out_dir, name);
            write_trajectory_csv(traj, tf);
            std::snprintf(name, sizeof(name), "cycle_%02d_estimates.csv", j + 1);
            auto ef = open_out(out_dir, name);
            write_estimates_csv(est_points, ef);
        }
        vt_o.push_back(res.vt_outcome);
        ct_o.push_back(res.ct_outcome);
        at_o.push_back(res.at_outcome);
        hr.cycles.push_back(std::move(res));
    }

    hr.vt_tally = tally(vt_o);
    hr.ct_tally = tally(ct_o);
    hr.at_tally = tally(at_o);

    if (files) {
        auto of = open_out(out_dir, "outcomes.csv");
        write_outcomes_csv(hr.cycles, of);
        auto tf = open_out(out_dir, "tallies.csv");
        write_tally_csv({{Strategy::VoltageThreshold, hr.vt_tally},
                         {Strategy::CapacityThreshold, hr.ct_tally},
                         {Strategy::AdaptiveThreshold, hr.at_tally}},
                        tf);
    }
    return hr;
}

void write_outcomes_csv(const std::vector<CycleResult>& cycles, std::ostream& out) {
    out << "cycle,f2,strategy,outcome,tau_s_s,y_V,x1_hat,stop_reason,misses\n";
    const auto row = [&](const CycleResult& c, Strategy s,
                         const std::optional<StrategyObservation>& obs, Outcome o) {
        out << c.cycle << ',' << fmt_g(c.f2) << ',' << strategy_name(s) << ','
            << outcome_name(o) << ',';
        if (obs)
            out << fmt_g(obs->tau_s) << ',' << fmt_g(obs->y) << ',' << fmt_g(obs->x1_hat);
        else
            out << ",,";
        out << ',' << c.stop_reason << ',' << c.miss_count << '\n';
    };
    for (const CycleResult& c : cycles) {
        row(c, Strategy::VoltageThreshold, c.vt, c.vt_outcome);
        row(c, Strategy::CapacityThreshold, c.ct, c.ct_outcome);
        row(c, Strategy::AdaptiveThreshold, c.at, c.at_outcome);
    }
}

AnalysisSetup prepare_analysis(const ScenarioConfig& cfg) {
    if (!cfg.has_tasks) throw ConfigError("config has no tasks block");
    if (!cfg.has_window) throw ConfigError("config has no window block");
    AnalysisSetup s;
    s.origin = common_origin(cfg.tasks);
    if (cfg.t_a < s.origin)
        throw ConfigError("window.t_a_us lies before the tasks' first arrival");

    std::int64_t min_inst = 0;
    for (const TaskSpecConfig& spec : cfg.tasks)
        if (spec.perturbation)
            min_inst = std::max(min_inst, (cfg.t_b - s.origin).us / spec.t.us + 4);
    s.realized = build_task_set(cfg.tasks, min_inst, 0);
    s.nominal = build_task_set(strip_perturbations(cfg.tasks), 0, 0);

    const int n = s.realized.size();
    if (cfg.t_a == s.origin) {
        s.warm_realized = SchedState::zero(n);
        s.warm_nominal = SchedState::zero(n);
    } else {
        s.warm_realized =
            state_at(s.realized, s.origin, cfg.t_a, SchedState::zero(n), cfg.policy, Side::At)
                .state;
        s.warm_nominal =
            state_at(s.nominal, s.origin, cfg.t_a, SchedState::zero(n), cfg.policy, Side::At)
                .state;
    }
    return s;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    ScenarioResult result;
    namespace fs = std::filesystem;
    const bool files = !out_dir.empty();
    if (files) fs::create_directories(out_dir);

    if (cfg.has_tasks && cfg.has_window) {
        const AnalysisSetup setup = prepare_analysis(cfg);
        const SimResult sim =
            simulate(setup.realized, cfg.t_a, cfg.t_b, setup.warm_realized, cfg.policy);
        result.sched = dynamic_schedulability_test(setup.realized, cfg.t_a, cfg.t_b,
                                                   setup.warm_realized, cfg.policy);
        result.robustness =
            robustness_measure(setup.nominal, cfg.t_a, cfg.t_b, setup.warm_nominal, cfg.policy);
        if (files) {
            auto wf = open_out(out_dir, "windows.csv");
            write_windows_csv(sim.windows, wf);
            auto mf = open_out(out_dir, "modes.csv");
            write_mode_trace_csv(sim.modes, mf);
            auto sf = open_out(out_dir, "sched_report.csv");
            write_sched_report_csv(*result.sched, sf);
            auto rf = open_out(out_dir, "robustness.csv");
            write_robustness_csv(*result.robustness, rf);

            if (cfg.has_battery) {
                const TimingSummary timing = summarize_timing(
                    setup.realized, cfg.t_a, cfg.t_b, setup.warm_realized, cfg.policy);
                const PiecewiseConstant busy = intervals01(cfg.t_a, timing.busy);
                const PiecewiseConstant spikes =
                    pulse_train(cfg.t_a, timing.misses, cfg.load.miss_spike.duration,
                                cfg.load.miss_spike.amplitude_a);
                std::array<PiecewiseConstant, 3> u;
                for (int c = 0; c < 3; ++c) {
                    if (cfg.load.u.mode == "synthetic")
                        u[static_cast<std::size_t>(c)] = synthetic_u(
                            setup.origin, cfg.t_b, cfg.load.u.update_period,
                            cfg.load.u.amplitude,
                            cfg.load.u.seed + 1000003ULL * static_cast<std::uint64_t>(c));
                    else
                        u[static_cast<std::size_t>(c)] =
                            constant_signal(setup.origin, cfg.load.u.value);
                }
                const CurrentSchedule schedule =
                    sum_current(cfg.t_a, cfg.t_b, cfg.load.ip1_base_a + cfg.load.ip2_a,
                                {{&u[0], cfg.load.p_a_per_unit},
                                 {&u[1], cfg.load.p_a_per_unit},
                                 {&u[2], cfg.load.p_a_per_unit},
                                 {&busy, cfg.load.ip1_active_delta_a},
                                 {&spikes, 1.0}});
                auto lf = open_out(out_dir, "load_current.csv");
                write_current_csv(schedule, lf);
            }
        }
    }

    if (cfg.has_cycles && cfg.has_battery) result.harness = run_cycles(cfg, out_dir);
    return result;
}

}  // namespace cpsb
