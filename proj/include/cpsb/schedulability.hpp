#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cpsb/timing_engine.hpp"

namespace cpsb {

// Exact windowed schedulability test. A task is schedulable within a window
// iff its instance either does not expire there (q > 0 at the window end) or
// expires with enough accumulated spare (C <= s). The non-strict comparison is
// deliberate: an instance with C exactly equal to its spare finishes on time.
struct SchedReport {
    struct Failure {
        int task = 0;  // 0-based
        std::int64_t window = 0;
        Instant t_start, t_end;
    };

    std::vector<std::vector<std::uint8_t>> ds;  // [task][window], 1 = schedulable
    std::vector<Instant> window_ends;
    std::vector<Failure> failures;
    bool schedulable = true;
};

int window_schedulable(int n, const SchedState& end_state, Duration c_n);

SchedReport dynamic_schedulability_test(const TaskSet& ts, Instant t_a, Instant t_b,
                                        const SchedState& initial, const Policy& policy);

// columns: w, t_end_us, ds_1..ds_N
void write_sched_report_csv(const SchedReport& report, std::ostream& out);

}  // namespace cpsb
