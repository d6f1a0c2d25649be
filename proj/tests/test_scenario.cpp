#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "cpsb/config.hpp"
#include "cpsb/errors.hpp"
#include "cpsb/rng.hpp"
#include "cpsb/scenario.hpp"
#include "support/example_sets.hpp"
#include "support/tick_sim.hpp"

using namespace cpsb;

namespace {

Instant us(std::int64_t v) { return Instant{v}; }

// busy intervals (any task executing) straight from the tick-level schedule
std::vector<std::pair<Instant, Instant>> tick_busy(const testing::TickResult& ref) {
    std::vector<std::pair<Instant, Instant>> xs;
    for (const auto& segs : ref.per_task)
        for (const ModeSegment& s : segs)
            if (s.mode == Mode::Executing) xs.emplace_back(s.begin, s.end);
    std::sort(xs.begin(), xs.end());
    std::vector<std::pair<Instant, Instant>> out;
    for (const auto& [b, e] : xs) {
        if (!out.empty() && b <= out.back().second)
            out.back().second = std::max(out.back().second, e);
        else
            out.emplace_back(b, e);
    }
    return out;
}

}  // namespace

TEST_CASE("piecewise-constant signals are right-continuous step functions") {
    const PiecewiseConstant sig({us(10), us(20), us(35)}, {1.0, -2.0, 0.5});
    CHECK_THROWS_AS((void)sig.at(us(9)), OutOfDomain);
    CHECK(sig.at(us(10)) == 1.0);
    CHECK(sig.at(us(19)) == 1.0);
    CHECK(sig.at(us(20)) == -2.0);   // value switches exactly at the knot
    CHECK(sig.at(us(34)) == -2.0);
    CHECK(sig.at(us(35)) == 0.5);
    CHECK(sig.at(us(100000)) == 0.5);  // last value extends forever

    CHECK_THROWS_AS(PiecewiseConstant({}, {}), ConfigError);
    CHECK_THROWS_AS(PiecewiseConstant({us(0), us(0)}, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(PiecewiseConstant({us(0)}, {1.0, 2.0}), ConfigError);

    const PiecewiseConstant flat = constant_signal(us(0), 0.7);
    CHECK(flat.at(us(0)) == 0.7);
    CHECK(flat.at(us(123456789)) == 0.7);
}

TEST_CASE("synthetic torque traces are seeded, periodic, and bounded") {
    const Duration period = Duration::millis(500);
    const PiecewiseConstant a = synthetic_u(us(0), us(10000000), period, 0.5, 7);
    const PiecewiseConstant b = synthetic_u(us(0), us(10000000), period, 0.5, 7);
    const PiecewiseConstant c = synthetic_u(us(0), us(10000000), period, 0.5, 8);
    REQUIRE(a.knots().size() == 20);
    CHECK(a.knots() == b.knots());
    CHECK(a.values() == b.values());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        CHECK(a.values()[i] >= 0.0);
        CHECK(a.values()[i] < 0.5);
        CHECK(a.knots()[i].us == static_cast<std::int64_t>(i) * 500000);
        any_diff = any_diff || (a.values()[i] != c.values()[i]);
    }
    CHECK(any_diff);
    // a window shorter than one period still yields one segment
    const PiecewiseConstant tiny = synthetic_u(us(0), us(1), period, 0.5, 7);
    CHECK(tiny.knots().size() == 1);
    CHECK_THROWS_AS(synthetic_u(us(0), us(10), Duration::micros(0), 0.5, 7), ConfigError);
    CHECK_THROWS_AS(synthetic_u(us(0), us(10), period, -1.0, 7), ConfigError);
}

TEST_CASE("pulse trains add overlapping rectangles") {
    const Duration w = Duration::micros(100);
    const PiecewiseConstant p =
        pulse_train(us(0), {us(50), us(100), us(400)}, w, 2.0);
    CHECK(p.at(us(0)) == 0.0);
    CHECK(p.at(us(50)) == 2.0);           // first pulse alone
    CHECK(p.at(us(100)) == 4.0);          // overlap region [100, 150)
    CHECK(p.at(us(149)) == 4.0);
    CHECK(p.at(us(150)) == 2.0);          // first pulse ended
    CHECK(p.at(us(199)) == 2.0);
    CHECK(p.at(us(200)) == 0.0);          // both ended
    CHECK(p.at(us(400)) == 2.0);
    CHECK(p.at(us(500)) == 0.0);

    // coincident starts stack
    const PiecewiseConstant twin = pulse_train(us(0), {us(10), us(10)}, w, 1.5);
    CHECK(twin.at(us(10)) == 3.0);
    CHECK(twin.at(us(110)) == 0.0);

    // empty or degenerate trains are identically zero
    CHECK(pulse_train(us(0), {}, w, 2.0).at(us(5)) == 0.0);
    CHECK(pulse_train(us(0), {us(10)}, Duration::micros(0), 2.0).at(us(10)) == 0.0);
    CHECK(pulse_train(us(0), {us(10)}, w, 0.0).at(us(10)) == 0.0);
    CHECK_THROWS_AS(pulse_train(us(100), {us(50)}, w, 1.0), OutOfDomain);
}

TEST_CASE("interval indicators merge overlaps and clip nothing") {
    const PiecewiseConstant ind =
        intervals01(us(0), {{us(10), us(20)}, {us(15), us(30)}, {us(50), us(60)}});
    CHECK(ind.at(us(0)) == 0.0);
    CHECK(ind.at(us(10)) == 1.0);
    CHECK(ind.at(us(29)) == 1.0);  // merged across the overlap
    CHECK(ind.at(us(30)) == 0.0);
    CHECK(ind.at(us(50)) == 1.0);
    CHECK(ind.at(us(60)) == 0.0);
    // an interval starting at the origin flips the initial value
    const PiecewiseConstant at0 = intervals01(us(0), {{us(0), us(5)}});
    CHECK(at0.at(us(0)) == 1.0);
    CHECK(at0.at(us(5)) == 0.0);
}

TEST_CASE("summed current schedules agree with pointwise evaluation") {
    const PiecewiseConstant u1 = synthetic_u(us(0), us(1000), Duration::micros(70), 0.5, 3);
    const PiecewiseConstant u2 = synthetic_u(us(0), us(1000), Duration::micros(110), 0.5, 4);
    const PiecewiseConstant spikes = pulse_train(us(0), {us(95), us(300)}, Duration::micros(40), 1.0);
    const CurrentSchedule s =
        sum_current(us(0), us(1000), 0.6, {{&u1, 0.1}, {&u2, 0.1}, {&spikes, 1.0}});
    REQUIRE(!s.knots.empty());
    CHECK(s.knots.front() == us(0));
    CHECK(s.end == us(1000));
    // adjacent segments always differ (equal values are coalesced)
    for (std::size_t i = 1; i < s.amps.size(); ++i) CHECK(s.amps[i] != s.amps[i - 1]);
    for (std::int64_t t = 0; t < 1000; t += 7) {
        const double expect = 0.6 + 0.1 * u1.at(us(t)) + 0.1 * u2.at(us(t)) + spikes.at(us(t));
        CHECK(s.at(us(t)) == doctest::Approx(expect).epsilon(1e-15));
    }
    CHECK_THROWS_AS((void)s.at(us(-1)), OutOfDomain);
    CHECK_THROWS_AS((void)s.at(us(1000)), OutOfDomain);  // right end is open
    CHECK_THROWS_AS(sum_current(us(0), us(0), 0.0, {}), ConfigError);
    // a component that starts after the origin cannot be summed
    const PiecewiseConstant late({us(500)}, {1.0});
    CHECK_THROWS_AS(sum_current(us(0), us(1000), 0.0, {{&late, 1.0}}), OutOfDomain);

    std::ostringstream csv;
    write_current_csv(s, csv);
    const std::string text = csv.str();
    CHECK(text.rfind("t_us,i_A\n", 0) == 0);
    CHECK(text.find("\n1000,") != std::string::npos);  // closing row at the end
}

TEST_CASE("cpu activity and the load formula follow the schedule") {
    const TaskSet ts = testing::three_periodic_seconds();
    const SimResult sim = simulate(ts, us(0), us(12000000), SchedState::zero(3), Policy::fixed());

    LoadModel lm;
    lm.u = {constant_signal(us(0), 0.4), constant_signal(us(0), 0.2),
            constant_signal(us(0), 0.1)};
    // during [0, 0.5)s task 0 executes; at 11 s everything is free
    CHECK(cpu_activity(sim.modes, us(250000)) == 1);
    CHECK(cpu_activity(sim.modes, us(11000000)) == 0);
    CHECK_THROWS_AS(cpu_activity(sim.modes, us(-1)), OutOfDomain);
    CHECK_THROWS_AS(cpu_activity(sim.modes, us(12000000)), OutOfDomain);
    // busy: 0.1*0.7 + (0.3 + 0.1) + 0.3 ; idle drops the 0.1 delta
    CHECK(load_current(lm, sim.modes, us(250000)) == doctest::Approx(0.77));
    CHECK(load_current(lm, sim.modes, us(11000000)) == doctest::Approx(0.67));
}

TEST_CASE("timing summaries match the tick-level schedule") {
    Rng rng(271828);
    testing::RandomTaskSetOptions opt;
    opt.horizon_us = 200000;
    for (int trial = 0; trial < 4; ++trial) {
        opt.varying_instances = (trial % 2 == 1);
        const TaskSet ts = testing::random_task_set(rng, opt);
        const Instant t_a = us(0), t_b = us(200000);
        for (const Policy& pol : {Policy::fixed(), Policy::edf()}) {
            const testing::TickResult ref = testing::tick_simulate(ts, t_a, t_b, pol);
            const TimingSummary got =
                summarize_timing(ts, t_a, t_b, SchedState::zero(ts.size()), pol);
            CHECK(got.busy == tick_busy(ref));
            REQUIRE(got.misses.size() == ref.misses.size());
            std::vector<Instant> ref_misses;
            for (const testing::TickMiss& m : ref.misses) ref_misses.push_back(m.deadline);
            std::vector<Instant> got_misses = got.misses;
            std::sort(got_misses.begin(), got_misses.end());
            std::sort(ref_misses.begin(), ref_misses.end());
            CHECK(got_misses == ref_misses);
            CHECK(got.schedulable == ref.schedulable);
        }
    }
}

TEST_CASE("the cycle harness scores a constant-current discharge end to end") {
    ScenarioConfig cfg;
    cfg.battery.k = {13.51, 27.12, 703.6, 752.9, 4475.0, 6056.0, 0.1562, 24.37,
                     0.07446, 0.3208, 29.14, 0.04669, 6.603, 155.2, 0.04984,
                     1.031, 35.0, 3.685, 0.2156, 0.1178, 0.3201};
    cfg.battery.c_ah = 0.275;
    cfg.has_battery = true;
    cfg.switching.v_initial = circuit_values(1.0, cfg.battery).e_o;
    cfg.has_cycles = true;
    cfg.cycles.mode = "constant";
    cfg.cycles.f2 = {0.2, 0.2};
    cfg.cycles.currents_a = {2.0};
    cfg.filter.pf.m = 80;
    cfg.filter.h_s = 0.1;

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cpsb_harness_smoke";
    fs::remove_all(dir);
    const HarnessResult hr = run_cycles(cfg, dir.string());
    REQUIRE(hr.cycles.size() == 2);
    for (const CycleResult& c : hr.cycles) {
        CHECK(c.f2 == 0.2);
        CHECK(!c.stop_reason.empty());
        CHECK(c.end_time_s > 0.0);
        // a 2 A drain on a derated cell must trip every strategy before the floor
        CHECK(c.vt.has_value());
        CHECK(c.ct.has_value());
        CHECK(c.at.has_value());
        CHECK(c.at_outcome == Outcome::Hit);
        // the estimator never reports a switch below the slow-branch threshold
        CHECK(c.at->x1_hat >= hr.th.delta2);
    }
    CHECK(hr.at_tally.t == 2);
    CHECK(hr.at_tally.dr() == 1.0);
    CHECK(hr.vt_tally.t == 2);
    // the per-cycle seed stride gives each cycle its own noise realization
    CHECK(hr.cycles[0].at->y != hr.cycles[1].at->y);

    for (const char* name : {"cycle_01_trajectory.csv", "cycle_01_estimates.csv",
                             "cycle_02_trajectory.csv", "cycle_02_estimates.csv",
                             "outcomes.csv", "tallies.csv"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir / name));
    }
    std::ifstream tallies(dir / "tallies.csv");
    std::string header;
    std::getline(tallies, header);
    CHECK(header == "strategy,DR,FAR,MDR");
    fs::remove_all(dir);

    ScenarioConfig broken = cfg;
    broken.has_battery = false;
    CHECK_THROWS_AS(run_cycles(broken, ""), ConfigError);
    broken = cfg;
    broken.cycles.mode = "tasks";  // no tasks block present
    CHECK_THROWS_AS(run_cycles(broken, ""), ConfigError);
}

TEST_CASE("outcome rows serialize one line per strategy") {
    CycleResult c;
    c.cycle = 3;
    c.f2 = 0.5;
    c.vt = StrategyObservation{12.5, 3.5, 0.25};
    c.vt_outcome = Outcome::Hit;
    c.ct_outcome = Outcome::Miss;
    c.at_outcome = Outcome::Miss;
    c.stop_reason = "soc-floor";
    c.miss_count = 4;
    std::ostringstream out;
    write_outcomes_csv({c}, out);
    const std::string text = out.str();
    CHECK(text.rfind("cycle,f2,strategy,outcome,tau_s_s,y_V,x1_hat,stop_reason,misses\n", 0) ==
          0);
    CHECK(text.find("3,0.5,VT,Hit,12.5,3.5,0.25,soc-floor,4\n") != std::string::npos);
    CHECK(text.find("3,0.5,CT,Miss,,,,soc-floor,4\n") != std::string::npos);
    CHECK(outcome_name(Outcome::FalseAlarm) == "FalseAlarm");
}

TEST_CASE("analysis setup warms both task sets to the window start") {
    ScenarioConfig cfg;
    cfg.policy = Policy::fixed();
    cfg.t_a = us(10000000);
    cfg.t_b = us(13000000);
    cfg.has_window = true;
    cfg.tasks.resize(2);
    cfg.tasks[0].first_arrival = us(0);
    cfg.tasks[0].c = Duration::micros(4000);
    cfg.tasks[0].t = Duration::micros(15400);
    PerturbationSpec ps;
    ps.lo = Duration::micros(-1500);
    ps.hi = Duration::micros(4000);
    ps.seed = 101;
    cfg.tasks[0].perturbation = ps;
    cfg.tasks[1].first_arrival = us(0);
    cfg.tasks[1].c = Duration::micros(4000);
    cfg.tasks[1].t = Duration::micros(20800);
    cfg.has_tasks = true;

    const AnalysisSetup setup = prepare_analysis(cfg);
    CHECK(setup.origin == us(0));
    // nominal set has no perturbations: every instance keeps the base pair
    for (std::int64_t k = 1; k <= 10; ++k)
        CHECK(setup.nominal.tasks[0].instance(k).computing_time.us == 4000);
    bool perturbed_somewhere = false;
    for (std::int64_t k = 1; k <= 10; ++k)
        perturbed_somewhere = perturbed_somewhere ||
                              (setup.realized.tasks[0].instance(k).computing_time.us != 4000);
    CHECK(perturbed_somewhere);
    // warm states came from a cold start at the origin
    const auto expect = state_at(setup.realized, us(0), cfg.t_a, SchedState::zero(2),
                                 cfg.policy, Side::At);
    CHECK(setup.warm_realized.q == expect.state.q);
    CHECK(setup.warm_realized.s == expect.state.s);

    ScenarioConfig bad = cfg;
    bad.t_a = us(-5);
    CHECK_THROWS_AS(prepare_analysis(bad), ConfigError);
}
