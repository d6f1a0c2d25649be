#include "cpsb/timing_engine.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "cpsb/errors.hpp"

namespace cpsb {

std::vector<int> hp_fixed(int n) {
    std::vector<int> hp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) hp[static_cast<std::size_t>(i)] = i;
    return hp;
}

std::vector<int> hp_edf(int n, const std::vector<Duration>& q) {
    std::vector<int> hp;
    for (int i = 0; i < static_cast<int>(q.size()); ++i) {
        if (i == n) continue;
        const auto qi = q[static_cast<std::size_t>(i)];
        const auto qn = q[static_cast<std::size_t>(n)];
        if (qi < qn || (qi == qn && i < n)) hp.push_back(i);
    }
    return hp;
}

std::vector<int> hp_set(const Policy& policy, int n, const std::vector<Duration>& q) {
    return policy.kind == PolicyKind::FixedPriority ? hp_fixed(n) : hp_edf(n, q);
}

Duration window_length(const std::vector<Duration>& q_at_tf, Instant t_f, Instant t_b) {
    if (t_f >= t_b) throw EmptyWindow("window start at or past the interval end");
    Duration l = t_b - t_f;
    for (const Duration q : q_at_tf) l = std::min(l, q);
    return l;
}

std::vector<Duration> residues(const SchedState& state, const WindowChars& chars) {
    std::vector<Duration> r(state.s.size());
    for (std::size_t n = 0; n < r.size(); ++n)
        r[n] = std::max(Duration{}, chars.c[n] - state.s[n]);
    return r;
}

namespace {

// arrival reset of the dynamic timing model: where q(t_f^-) = 0, the new
// instance arrives, so q <- T(t_f) and s <- 0; elsewhere both hold
SchedState apply_arrivals(const SchedState& before, const WindowChars& chars) {
    SchedState st = before;
    for (std::size_t n = 0; n < st.q.size(); ++n) {
        if (sgn(st.q[n]) == 0) {
            st.q[n] = chars.t[n];
            st.s[n] = Duration{};
        }
    }
    return st;
}

struct InWindow {
    SchedState start;             // post-arrival state at t_f
    std::vector<Duration> r;      // residues at t_f
    std::vector<Duration> hp_interf;  // sum of hp residues per task

    InWindow(const SchedState& before, const WindowChars& chars, const Policy& policy)
        : start(apply_arrivals(before, chars)), r(residues(start, chars)) {
        const int n_tasks = start.size();
        hp_interf.resize(static_cast<std::size_t>(n_tasks));
        for (int n = 0; n < n_tasks; ++n) {
            Duration sum{};
            for (int i : hp_set(policy, n, start.q)) sum += r[static_cast<std::size_t>(i)];
            hp_interf[static_cast<std::size_t>(n)] = sum;
        }
    }

    SchedState at(Duration dt) const {
        SchedState st = start;
        for (std::size_t n = 0; n < st.q.size(); ++n) {
            st.q[n] -= dt;
            st.s[n] += std::max(Duration{}, dt - hp_interf[n]);
        }
        return st;
    }
};

class SegmentBuilder {
public:
    SegmentBuilder(int n_tasks, Instant t_a, Instant t_b) {
        trace_.t_a = t_a;
        trace_.t_b = t_b;
        trace_.per_task.resize(static_cast<std::size_t>(n_tasks));
    }

    void add(int task, Instant begin, Instant end, Mode mode) {
        if (begin >= end) return;
        auto& segs = trace_.per_task[static_cast<std::size_t>(task)];
        if (!segs.empty() && segs.back().mode == mode && segs.back().end == begin) {
            segs.back().end = end;
            return;
        }
        segs.push_back({begin, end, mode});
    }

    ModeTrace take() { return std::move(trace_); }

private:
    ModeTrace trace_;
};

}  // namespace

SchedState step_window(Instant t_f, Instant t, const SchedState& before, const WindowChars& chars,
                       const Policy& policy) {
    if (t < t_f) throw OutOfWindow("query before the window start");
    const InWindow win(before, chars, policy);
    Duration max_dt = win.start.q.empty() ? Duration{} : win.start.q[0];
    for (const Duration q : win.start.q) max_dt = std::min(max_dt, q);
    if (t - t_f > max_dt) throw OutOfWindow("query past the window end");
    return win.at(t - t_f);
}

namespace {

// Shared window loop. sink gets each WindowRecord; modes (optional) collects
// the scheduled-behavior segments.
void run_windows(const TaskSet& ts, Instant t_a, Instant t_b, const SchedState& initial,
                 const Policy& policy, const std::function<void(const WindowRecord&)>& sink,
                 SegmentBuilder* modes) {
    const int n_tasks = ts.size();
    if (initial.size() != n_tasks) throw ConfigError("initial state size mismatch");
    if (t_a >= t_b) throw EmptyWindow("analysis interval is empty");

    SchedState state = initial;
    Instant t_f = t_a;
    std::int64_t w = 0;
    WindowChars chars;
    chars.c.resize(static_cast<std::size_t>(n_tasks));
    chars.t.resize(static_cast<std::size_t>(n_tasks));

    while (t_f < t_b) {
        for (int n = 0; n < n_tasks; ++n) {
            const auto [c, t] = ts.tasks[static_cast<std::size_t>(n)].characteristics_at(t_f);
            chars.c[static_cast<std::size_t>(n)] = c;
            chars.t[static_cast<std::size_t>(n)] = t;
        }
        const InWindow win(state, chars, policy);
        const Duration l = window_length(win.start.q, t_f, t_b);
        const Instant t_end = t_f + l;

        WindowRecord rec;
        rec.w = w;
        rec.t_f = t_f;
        rec.l_f = l;
        rec.at_start = win.start;
        rec.at_end = win.at(l);
        rec.chars = chars;
        sink(rec);

        if (modes) {
            for (int n = 0; n < n_tasks; ++n) {
                const std::size_t ni = static_cast<std::size_t>(n);
                const Duration pre = std::min(win.hp_interf[ni], l);
                const Duration done = std::min(win.hp_interf[ni] + win.r[ni], l);
                // a task with no pending work is idle, not blocked, during the
                // higher-priority prefix
                if (win.r[ni] > Duration{})
                    modes->add(n, t_f, t_f + pre, Mode::Preempted);
                else
                    modes->add(n, t_f, t_f + pre, Mode::Free);
                modes->add(n, t_f + pre, t_f + done, Mode::Executing);
                modes->add(n, t_f + done, t_end, Mode::Free);
            }
        }

        state = rec.at_end;
        t_f = t_end;
        ++w;
    }
}

}  // namespace

void simulate_stream(const TaskSet& ts, Instant t_a, Instant t_b, const SchedState& initial,
                     const Policy& policy, const std::function<void(const WindowRecord&)>& sink) {
    run_windows(ts, t_a, t_b, initial, policy, sink, nullptr);
}

SimResult simulate(const TaskSet& ts, Instant t_a, Instant t_b, const SchedState& initial,
                   const Policy& policy) {
    SimResult res;
    SegmentBuilder builder(ts.size(), t_a, t_b);
    run_windows(
        ts, t_a, t_b, initial, policy,
        [&res](const WindowRecord& rec) { res.windows.push_back(rec); }, &builder);
    res.modes = builder.take();
    res.final_state = res.windows.back().at_end;
    return res;
}

Mode ModeTrace::mode_at(int task, Instant t) const {
    if (t < t_a || t >= t_b) throw OutOfDomain("instant outside the trace domain");
    const auto& segs = per_task[static_cast<std::size_t>(task)];
    const auto it = std::upper_bound(segs.begin(), segs.end(), t,
                                     [](Instant v, const ModeSegment& s) { return v < s.begin; });
    return (it - 1)->mode;
}

StateQuery state_at(const TaskSet& ts, Instant t_a, Instant t, const SchedState& initial,
                    const Policy& policy, Side side) {
    if (t < t_a) throw OutOfDomain("instant before the analysis start");
    const int n_tasks = ts.size();

    SchedState prev = initial;  // state at boundary^-
    Instant t_f = t_a;
    while (true) {
        WindowChars chars;
        chars.c.resize(static_cast<std::size_t>(n_tasks));
        chars.t.resize(static_cast<std::size_t>(n_tasks));
        for (int n = 0; n < n_tasks; ++n) {
            const auto [c, tt] = ts.tasks[static_cast<std::size_t>(n)].characteristics_at(t_f);
            chars.c[static_cast<std::size_t>(n)] = c;
            chars.t[static_cast<std::size_t>(n)] = tt;
        }
        if (t == t_f && side == Side::Before) {
            // residues of the expiring characteristics need the previous
            // window's view; recompute them from the pre-arrival state
            WindowChars prev_chars;
            prev_chars.c.resize(static_cast<std::size_t>(n_tasks));
            prev_chars.t.resize(static_cast<std::size_t>(n_tasks));
            const Instant probe = t_f - Duration::micros(1);
            for (int n = 0; n < n_tasks; ++n) {
                const auto& tr = ts.tasks[static_cast<std::size_t>(n)];
                const auto [c, tt] =
                    t_f > tr.first_arrival() ? tr.characteristics_at(probe) : tr.characteristics_at(t_f);
                prev_chars.c[static_cast<std::size_t>(n)] = c;
                prev_chars.t[static_cast<std::size_t>(n)] = tt;
            }
            return {prev, residues(prev, prev_chars)};
        }
        const InWindow win(prev, chars, policy);
        Duration min_q = win.start.q.empty() ? Duration{} : win.start.q[0];
        for (const Duration q : win.start.q) min_q = std::min(min_q, q);
        const Instant t_end = t_f + min_q;
        if (t < t_end) {
            const SchedState st = win.at(t - t_f);
            return {st, residues(st, chars)};
        }
        prev = win.at(min_q);
        t_f = t_end;
    }
}

void write_mode_trace_csv(const ModeTrace& trace, std::ostream& out) {
    out << "task,t_start_us,t_end_us,mode\n";
    for (std::size_t n = 0; n < trace.per_task.size(); ++n) {
        for (const ModeSegment& seg : trace.per_task[n]) {
            out << (n + 1) << ',' << seg.begin.us << ',' << seg.end.us << ',';
            switch (seg.mode) {
                case Mode::Preempted: out << "0.5"; break;
                case Mode::Executing: out << "1"; break;
                default: out << "0"; break;
            }
            out << '\n';
        }
    }
}

void write_windows_csv(const std::vector<WindowRecord>& windows, std::ostream& out) {
    const int n_tasks = windows.empty() ? 0 : windows.front().at_start.size();
    out << "w,t_f_us,L_f_us";
    for (int n = 1; n <= n_tasks; ++n) out << ",q_" << n << "_us";
    for (int n = 1; n <= n_tasks; ++n) out << ",s_" << n << "_us";
    out << '\n';
    for (const WindowRecord& rec : windows) {
        out << rec.w << ',' << rec.t_f.us << ',' << rec.l_f.us;
        for (const Duration q : rec.at_start.q) out << ',' << q.us;
        for (const Duration s : rec.at_start.s) out << ',' << s.us;
        out << '\n';
    }
}

}  // namespace cpsb
