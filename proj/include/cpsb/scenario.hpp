#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpsb/battery_model.hpp"
#include "cpsb/battery_stability.hpp"
#include "cpsb/config.hpp"
#include "cpsb/robustness.hpp"
#include "cpsb/schedulability.hpp"
#include "cpsb/switching.hpp"
#include "cpsb/tasks.hpp"
#include "cpsb/time.hpp"
#include "cpsb/timing_engine.hpp"

namespace cpsb {

// Right-continuous piecewise-constant signal: values[i] holds on
// [knots[i], knots[i+1]), the last value extends forever.
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;
    PiecewiseConstant(std::vector<Instant> knots, std::vector<double> values);

    double at(Instant t) const;  // OutOfDomain before the first knot
    const std::vector<Instant>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<Instant> knots_;
    std::vector<double> values_;
};

// |u_j| traces: fresh uniform [0, amplitude] value every period
PiecewiseConstant synthetic_u(Instant origin, Instant end, Duration period, double amplitude,
                              std::uint64_t seed);
PiecewiseConstant constant_signal(Instant origin, double value);
// sum of equal-width rectangular pulses; overlaps add
PiecewiseConstant pulse_train(Instant origin, const std::vector<Instant>& starts, Duration width,
                              double amplitude);
// 0/1 indicator of sorted disjoint intervals
PiecewiseConstant intervals01(Instant origin,
                              const std::vector<std::pair<Instant, Instant>>& intervals);

// Supply-current model: per-controller torque currents plus two processor
// draws, one of which steps up while the CPU is busy.
struct LoadModel {
    double p = 0.1;
    double ip1_base = 0.3;
    double ip1_active_delta = 0.1;
    double ip2 = 0.3;
    std::array<PiecewiseConstant, 3> u;
};

// 1 when any task is preempted or executing at t, else 0
int cpu_activity(const ModeTrace& trace, Instant t);

// p * (|u1|+|u2|+|u3|) + ip1(t) + ip2
double load_current(const LoadModel& lm, const ModeTrace& trace, Instant t);

// One streaming scheduler pass reduced to what the load model needs: merged
// CPU-busy intervals and deadline-miss instants.
struct TimingSummary {
    std::vector<std::pair<Instant, Instant>> busy;
    std::vector<Instant> misses;
    bool schedulable = true;
};
TimingSummary summarize_timing(const TaskSet& ts, Instant t_a, Instant t_b,
                               const SchedState& initial, const Policy& policy);

// Fully resolved supply current: value amps[i] on [knots[i], knots[i+1]),
// domain [knots.front(), end). Every breakpoint of every component is a knot.
struct CurrentSchedule {
    std::vector<Instant> knots;
    std::vector<double> amps;
    Instant end;

    double at(Instant t) const;  // OutOfDomain outside [knots.front(), end)
};

CurrentSchedule sum_current(Instant origin, Instant end, double base,
                            const std::vector<std::pair<const PiecewiseConstant*, double>>& parts);

// columns: t_us, i_A (one row per breakpoint, then a closing row at the end)
void write_current_csv(const CurrentSchedule& schedule, std::ostream& out);

// Outcome of one charge-discharge cycle observed by all three strategies.
struct CycleResult {
    int cycle = 0;  // 1-based
    double f2 = 1.0;
    std::optional<StrategyObservation> vt, ct, at;
    Outcome vt_outcome = Outcome::Miss;
    Outcome ct_outcome = Outcome::Miss;
    Outcome at_outcome = Outcome::Miss;
    double end_time_s = 0.0;
    double x1_end = 0.0;
    std::string stop_reason;  // all-triggered | soc-floor | voltage-cutoff | horizon
    std::int64_t miss_count = 0;  // deadline misses within the cycle horizon
};

struct HarnessResult {
    std::vector<CycleResult> cycles;
    OutcomeTally vt_tally, ct_tally, at_tally;
    StabilityThresholds th;
};

// The cycle harness: per cycle, a fresh battery derated by that cycle's f2 is
// discharged by either the scheduler-driven load ("tasks") or a constant
// current ("constant"); one shared estimator run feeds all three switching
// strategies, and each cycle is scored per strategy. out_dir empty = no files.
HarnessResult run_cycles(const ScenarioConfig& cfg, const std::string& out_dir);

// columns: cycle, f2, strategy, outcome, tau_s_s, y_V, x1_hat, stop_reason, misses
void write_outcomes_csv(const std::vector<CycleResult>& cycles, std::ostream& out);

std::string outcome_name(Outcome o);

// Task-analysis inputs shared by the CLI stages: realized (perturbed) and
// nominal task sets over the analysis window, with warm-started states at t_a
// reached from the common origin.
struct AnalysisSetup {
    TaskSet realized, nominal;
    Instant origin;
    SchedState warm_realized, warm_nominal;
};
AnalysisSetup prepare_analysis(const ScenarioConfig& cfg);

struct ScenarioResult {
    std::optional<RobustnessReport> robustness;
    std::optional<SchedReport> sched;
    std::optional<HarnessResult> harness;
};

// End-to-end: task analysis (simulation, schedulability, robustness CSVs) when
// tasks and a window are configured, the load waveform over the analysis
// window when a battery is also present, and the cycle harness when cycles
// are configured. Deterministic given the config.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace cpsb
