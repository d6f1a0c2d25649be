#include "cpsb/switching.hpp"

#include <cstdio>
#include <ostream>

#include "cpsb/errors.hpp"

namespace cpsb {

SwitchDecision at_decide(const Estimate& est, double i_k, long step_index, double h,
                         const BatteryParams& p) {
    const double x1 = est.x_hat.x1;
    const double x2 = est.x_hat.x2;
    const double x3 = est.x_hat.x3;
    const double now = h * static_cast<double>(step_index);

    if (!(i_k > 0.0)) return {};
    const StabilityThresholds th = thresholds(p);
    if (x1 <= th.delta2) return {1, now};
    if (x2 <= 0.0 || x3 <= 0.0) return {};

    const CircuitValues cv = circuit_values(x1, p);
    const double eps = epsilon_lb(x2, x3, cv);
    if (!(i_k > eps)) return {};
    const double b = beta(x2, x3, i_k, cv);
    if (x1 < b) return {1, now};
    return {};
}

bool vt_decide(double y, double v_threshold) { return y <= v_threshold; }

bool ct_decide(double x1_hat, double c_threshold) { return x1_hat <= c_threshold; }

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::VoltageThreshold: return "VT";
        case Strategy::CapacityThreshold: return "CT";
        case Strategy::AdaptiveThreshold: return "AT";
    }
    return "?";
}

Outcome classify(Strategy strategy, const std::optional<StrategyObservation>& obs,
                 const SwitchRules& rules) {
    if (!obs) return Outcome::Miss;
    switch (strategy) {
        case Strategy::VoltageThreshold:
            return obs->x1_hat <= rules.soc_trigger ? Outcome::Hit : Outcome::FalseAlarm;
        case Strategy::CapacityThreshold:
        case Strategy::AdaptiveThreshold:
            if (obs->y > rules.v_false_alarm) return Outcome::FalseAlarm;
            if (obs->y <= rules.depleted_voltage()) return Outcome::Miss;
            return Outcome::Hit;
    }
    return Outcome::Miss;
}

OutcomeTally tally(const std::vector<Outcome>& outcomes) {
    if (outcomes.empty()) throw EmptyRuns("no runs to tally");
    OutcomeTally out;
    out.t = static_cast<int>(outcomes.size());
    for (const Outcome o : outcomes) {
        switch (o) {
            case Outcome::Hit: ++out.h; break;
            case Outcome::FalseAlarm: ++out.f; break;
            case Outcome::Miss: ++out.m; break;
        }
    }
    return out;
}

void write_tally_csv(const std::vector<std::pair<Strategy, OutcomeTally>>& rows,
                     std::ostream& out) {
    out << "strategy,DR,FAR,MDR\n";
    char buf[64];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& [strategy, t] : rows) {
        out << strategy_name(strategy) << ',' << fmt(t.dr()) << ',' << fmt(t.far()) << ','
            << fmt(t.mdr()) << '\n';
    }
}

}  // namespace cpsb
