#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cpsb/timing_engine.hpp"

namespace cpsb {

// Computing-time perturbations. eps[n][k] shifts instance k+1 of task n;
// deadlines are never perturbed, so the window partition of the perturbed set
// equals the nominal one.
struct PerturbationTrace {
    std::vector<std::vector<Duration>> eps;
};

TaskSet perturb(const TaskSet& nominal, const PerturbationTrace& samples);

// eta = -(s - s_nom), componentwise, for two states taken at the same instant
std::vector<Duration> eta_at(const SchedState& nominal_state, const SchedState& actual_state);

// Robustness measure over [t_a, t_b]: per window, the smallest spare-minus-
// computing-time slack among instances expiring at the window end; undefined
// (excluded) for windows where nothing expires. Computed purely from the
// nominal simulation.
struct RobustnessReport {
    struct WindowEntry {
        std::int64_t w = 0;
        Instant t_end;
        std::optional<Duration> br;
        int task = -1;  // argmin task when br is defined
    };

    std::vector<WindowEntry> windows;
    Duration br;  // min over defined entries
    std::int64_t binding_window = -1;
    int binding_task = -1;
    Instant binding_t_end;
    std::int64_t binding_instance = 0;  // 1-based instance index of the binding task
};

RobustnessReport robustness_measure(const TaskSet& nominal, Instant t_a, Instant t_b,
                                    const SchedState& initial, const Policy& policy);

// columns: w, t_end_us, B_R_us (empty field when undefined)
void write_robustness_csv(const RobustnessReport& report, std::ostream& out);

}  // namespace cpsb
