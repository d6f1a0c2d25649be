#include "cpsb/robustness.hpp"

#include <ostream>

#include "cpsb/errors.hpp"

namespace cpsb {

TaskSet perturb(const TaskSet& nominal, const PerturbationTrace& samples) {
    TaskSet actual;
    actual.tasks.reserve(nominal.tasks.size());
    for (std::size_t n = 0; n < nominal.tasks.size(); ++n) {
        const TaskTrace& tr = nominal.tasks[n];
        if (n >= samples.eps.size() || samples.eps[n].empty()) {
            actual.tasks.push_back(tr);
            continue;
        }
        TaskTrace shifted = tr;
        for (std::size_t k = 0; k < samples.eps[n].size(); ++k) {
            if (samples.eps[n][k].us == 0) continue;
            shifted = shifted.with_instance_shift(static_cast<std::int64_t>(k) + 1,
                                                  samples.eps[n][k]);
        }
        actual.tasks.push_back(shifted);
    }
    return actual;
}

std::vector<Duration> eta_at(const SchedState& nominal_state, const SchedState& actual_state) {
    std::vector<Duration> eta(nominal_state.s.size());
    for (std::size_t n = 0; n < eta.size(); ++n)
        eta[n] = -(actual_state.s[n] - nominal_state.s[n]);
    return eta;
}

RobustnessReport robustness_measure(const TaskSet& nominal, Instant t_a, Instant t_b,
                                    const SchedState& initial, const Policy& policy) {
    RobustnessReport report;
    bool any = false;

    simulate_stream(nominal, t_a, t_b, initial, policy, [&](const WindowRecord& rec) {
        RobustnessReport::WindowEntry entry;
        entry.w = rec.w;
        entry.t_end = rec.t_f + rec.l_f;
        for (int n = 0; n < rec.at_end.size(); ++n) {
            const std::size_t ni = static_cast<std::size_t>(n);
            if (rec.at_end.q[ni] > Duration{}) continue;  // instance does not expire here
            const Duration slack = rec.at_end.s[ni] - rec.chars.c[ni];
            if (!entry.br || slack < *entry.br) {
                entry.br = slack;
                entry.task = n;
            }
        }
        if (entry.br && (!any || *entry.br < report.br)) {
            any = true;
            report.br = *entry.br;
            report.binding_window = entry.w;
            report.binding_task = entry.task;
            report.binding_t_end = entry.t_end;
        }
        report.windows.push_back(entry);
    });

    if (!any) throw NoExpiryInRange("no instance expires at any window end in the interval");
    report.binding_instance = nominal.tasks[static_cast<std::size_t>(report.binding_task)]
                                  .effective_instance(report.binding_t_end - Duration::micros(1))
                                  .instance_index;
    return report;
}

void write_robustness_csv(const RobustnessReport& report, std::ostream& out) {
    out << "w,t_end_us,B_R_us\n";
    for (const auto& entry : report.windows) {
        out << entry.w << ',' << entry.t_end.us << ',';
        if (entry.br) out << entry.br->us;
        out << '\n';
    }
}

}  // namespace cpsb
