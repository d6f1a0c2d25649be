#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "cpsb/tasks.hpp"
#include "cpsb/time.hpp"

namespace cpsb {

enum class PolicyKind { FixedPriority, Edf };

// Priority map hp(n, t). Fixed priority: index order (task 0 highest), so it
// expects tasks sorted with longer periods at larger indices for RMS use. EDF
// compares dynamic deadlines, ties broken toward the smaller index.
struct Policy {
    PolicyKind kind = PolicyKind::FixedPriority;
    static Policy fixed() { return {PolicyKind::FixedPriority}; }
    static Policy edf() { return {PolicyKind::Edf}; }
};

// State variables at one instant: dynamic deadlines q and spares s. The
// residue r = max{0, C - s} is derived on demand, never stored.
struct SchedState {
    std::vector<Duration> q, s;
    static SchedState zero(int n) {
        return {std::vector<Duration>(static_cast<std::size_t>(n)),
                std::vector<Duration>(static_cast<std::size_t>(n))};
    }
    int size() const { return static_cast<int>(q.size()); }
    bool operator==(const SchedState&) const = default;
};

enum class Mode { Free, Preempted, Executing };

inline double mode_value(Mode m) {
    switch (m) {
        case Mode::Preempted: return 0.5;
        case Mode::Executing: return 1.0;
        default: return 0.0;
    }
}

struct ModeSegment {
    Instant begin, end;  // right-open [begin, end)
    Mode mode = Mode::Free;
    bool operator==(const ModeSegment&) const = default;
};

// Normalized per-task mode timeline over [t_a, t_b]: segments are right-open,
// nonempty, adjacent segments differ in mode, and per task they tile the
// domain. The mode at a boundary instant is the mode of the segment starting
// there.
struct ModeTrace {
    Instant t_a, t_b;
    std::vector<std::vector<ModeSegment>> per_task;
    Mode mode_at(int task, Instant t) const;
};

// Effective (C, T) per task at a window start.
struct WindowChars {
    std::vector<Duration> c, t;
};

struct WindowRecord {
    std::int64_t w = 0;
    Instant t_f;
    Duration l_f;
    SchedState at_start;  // after arrival resets at t_f
    SchedState at_end;    // at (t_f + l_f)^-
    WindowChars chars;
};

std::vector<int> hp_fixed(int n);
std::vector<int> hp_edf(int n, const std::vector<Duration>& q);
std::vector<int> hp_set(const Policy& policy, int n, const std::vector<Duration>& q);

Duration window_length(const std::vector<Duration>& q_at_tf, Instant t_f, Instant t_b);

std::vector<Duration> residues(const SchedState& state, const WindowChars& chars);

// Arrival resets at t_f applied to the t_f^- state, then the in-window laws
// evaluated at t. Valid for t in [t_f, t_f + min q] where q is the post-reset
// deadline vector; at the upper end this yields the (t_f + L_f)^- state.
SchedState step_window(Instant t_f, Instant t, const SchedState& before, const WindowChars& chars,
                       const Policy& policy);

struct SimResult {
    std::vector<WindowRecord> windows;
    ModeTrace modes;
    SchedState final_state;  // at t_b^-
};

SimResult simulate(const TaskSet& ts, Instant t_a, Instant t_b, const SchedState& initial,
                   const Policy& policy);

// Same window iteration without materializing anything; used for long horizons.
void simulate_stream(const TaskSet& ts, Instant t_a, Instant t_b, const SchedState& initial,
                     const Policy& policy, const std::function<void(const WindowRecord&)>& sink);

// Q/S/R at one instant. side picks the pre- or post-arrival state when t is a
// window boundary; residues use the effective characteristics on that side.
struct StateQuery {
    SchedState state;
    std::vector<Duration> r;
};
StateQuery state_at(const TaskSet& ts, Instant t_a, Instant t, const SchedState& initial,
                    const Policy& policy, Side side = Side::At);

// columns: task, t_start_us, t_end_us, mode (task is 1-based, mode 0/0.5/1)
void write_mode_trace_csv(const ModeTrace& trace, std::ostream& out);
// columns: w, t_f_us, L_f_us, q_1_us..q_N_us, s_1_us..s_N_us (state at window start)
void write_windows_csv(const std::vector<WindowRecord>& windows, std::ostream& out);

}  // namespace cpsb
