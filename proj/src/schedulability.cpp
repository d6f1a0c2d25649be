#include "cpsb/schedulability.hpp"

#include <ostream>

namespace cpsb {

int window_schedulable(int n, const SchedState& end_state, Duration c_n) {
    const std::size_t ni = static_cast<std::size_t>(n);
    if (end_state.q[ni] > Duration{}) return 1;
    return c_n <= end_state.s[ni] ? 1 : 0;
}

SchedReport dynamic_schedulability_test(const TaskSet& ts, Instant t_a, Instant t_b,
                                        const SchedState& initial, const Policy& policy) {
    SchedReport report;
    report.ds.resize(static_cast<std::size_t>(ts.size()));

    simulate_stream(ts, t_a, t_b, initial, policy, [&](const WindowRecord& rec) {
        report.window_ends.push_back(rec.t_f + rec.l_f);
        for (int n = 0; n < ts.size(); ++n) {
            const std::size_t ni = static_cast<std::size_t>(n);
            const int ok = window_schedulable(n, rec.at_end, rec.chars.c[ni]);
            report.ds[ni].push_back(static_cast<std::uint8_t>(ok));
            if (!ok) {
                report.schedulable = false;
                report.failures.push_back({n, rec.w, rec.t_f, rec.t_f + rec.l_f});
            }
        }
    });
    return report;
}

void write_sched_report_csv(const SchedReport& report, std::ostream& out) {
    out << "w,t_end_us";
    for (std::size_t n = 1; n <= report.ds.size(); ++n) out << ",ds_" << n;
    out << '\n';
    for (std::size_t w = 0; w < report.window_ends.size(); ++w) {
        out << w << ',' << report.window_ends[w].us;
        for (const auto& per_task : report.ds) out << ',' << static_cast<int>(per_task[w]);
        out << '\n';
    }
}

}  // namespace cpsb
