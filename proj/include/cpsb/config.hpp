#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpsb/battery_model.hpp"
#include "cpsb/soc_estimator.hpp"
#include "cpsb/switching.hpp"
#include "cpsb/tasks.hpp"
#include "cpsb/time.hpp"
#include "cpsb/timing_engine.hpp"

namespace cpsb {

inline constexpr const char* kVersion = "0.1.0";

// Per-instance computing-time perturbation: integer microseconds uniform on
// [lo, hi], drawn per instance from the seed.
struct PerturbationSpec {
    Duration lo, hi;
    std::uint64_t seed = 1;
    std::int64_t instances = 0;  // 0 = sized automatically from the horizon
};

// One task entry. Either an explicit instance list, or nominal (c, t) with an
// optional perturbation.
struct TaskSpecConfig {
    Instant first_arrival;
    Duration c, t;
    std::vector<std::pair<Duration, Duration>> instances;
    std::optional<PerturbationSpec> perturbation;
};

struct UTraceConfig {
    std::string mode = "constant";  // "constant" | "synthetic"
    double value = 0.0;             // constant: |u_j| for every controller
    std::uint64_t seed = 7;
    Duration update_period = Duration::millis(500);
    double amplitude = 1.0;  // synthetic: values uniform on [0, amplitude]
};

struct MissSpikeConfig {
    double amplitude_a = 3.5;
    Duration duration = Duration::millis(500);
};

struct LoadConfig {
    double p_a_per_unit = 0.1;      // torque-to-current constant
    double ip1_base_a = 0.3;        // processor 1 idle draw
    double ip1_active_delta_a = 0.1;  // extra draw while the CPU is busy
    double ip2_a = 0.3;             // processor 2 constant draw
    UTraceConfig u;
    MissSpikeConfig miss_spike;
};

struct FilterConfig {
    PfConfig pf;
    double h_s = 0.1;                            // sampling interval, exact microseconds
    std::array<double, 3> prior_std{0.01, 0.01, 0.01};
    std::uint64_t meas_seed = 99;                // measurement-noise stream
};

struct CyclesConfig {
    std::string mode = "tasks";      // "tasks" (scheduler-driven load) | "constant"
    std::vector<double> f2;          // per-cycle capacity derating
    std::vector<double> currents_a;  // constant mode, cycled through
    std::uint64_t seed_stride = 7919;  // added per cycle to every seed
};

struct SimConfig {
    double h_inner_s = 0.01;       // battery integrator step
    bool step_check = true;
    double voltage_cutoff_v = 2.2;  // end-of-life terminal voltage
    double x1_stop_margin = 0.001;  // stop above delta2 by at least this
};

struct BatteryRunConfig {
    double current_a = 1.0;
    double t_end_s = 0.0;
    double x1_0 = 1.0;
    double sample_period_s = 1.0;
};

struct ScenarioConfig {
    Policy policy = Policy::fixed();
    Instant t_a, t_b;  // analysis window
    std::vector<TaskSpecConfig> tasks;
    BatteryParams battery;
    LoadConfig load;
    FilterConfig filter;
    SwitchRules switching;  // v_initial filled from the fresh-battery no-load voltage
    CyclesConfig cycles;
    SimConfig sim;
    BatteryRunConfig battery_run;

    bool has_window = false;
    bool has_tasks = false;
    bool has_battery = false;
    bool has_cycles = false;
    bool has_battery_run = false;
};

// Parse a scenario config file; battery may be inline or a file reference
// resolved relative to the config's directory. Throws ConfigError.
ScenarioConfig load_scenario_config(const std::string& path);

// Parse a standalone battery parameter file (k1..k21, C_Ah, f1, f2).
BatteryParams load_battery_params(const std::string& path);

// Build the task set. Perturbed tasks materialize at least min_instances
// samples (their own `instances` count if larger); seed_offset shifts every
// perturbation seed (per-cycle realizations).
TaskSet build_task_set(const std::vector<TaskSpecConfig>& specs, std::int64_t min_instances,
                       std::uint64_t seed_offset = 0);

// All tasks must share one first arrival (the simulation origin); returns it.
Instant common_origin(const std::vector<TaskSpecConfig>& specs);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t file_fnv1a64(const std::string& path);  // ConfigError if unreadable

}  // namespace cpsb
