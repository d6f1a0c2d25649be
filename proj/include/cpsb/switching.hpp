#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpsb/battery_model.hpp"
#include "cpsb/battery_stability.hpp"
#include "cpsb/soc_estimator.hpp"

namespace cpsb {

// Result of one adaptive-threshold decision step. S is the switch flag; the
// switching instant tau_s (seconds on the sampling grid) is set exactly when
// S = 1.
struct SwitchDecision {
    int s = 0;
    std::optional<double> tau_s;
};

// Adaptive threshold: switch when the load current exceeds the rest point of
// the voltage-drop balance (i > epsilon_lb) and the estimated SoC has fallen
// below the adaptive boundary beta, both evaluated at the current estimate.
//
// Edge regimes the decision rule itself does not cover:
//   - i_k <= 0: no discharge, no switch (S = 0).
//   - x1_hat <= delta2: the estimate is already at or below the level where
//     the slow branch capacitance changes sign, so beta/epsilon are not
//     defined there; the only safe action is to switch (S = 1).
//   - x2_hat <= 0 or x3_hat <= 0: transients outside the discharge regime
//     (fresh or charging battery); no switch (S = 0).
SwitchDecision at_decide(const Estimate& est, double i_k, long step_index, double h,
                         const BatteryParams& p);

// Voltage threshold baseline: trigger when terminal voltage has dropped to
// the threshold.
bool vt_decide(double y, double v_threshold);

// Capacity threshold baseline: trigger when estimated SoC has dropped to the
// threshold.
bool ct_decide(double x1_hat, double c_threshold);

enum class Strategy { VoltageThreshold, CapacityThreshold, AdaptiveThreshold };

std::string strategy_name(Strategy s);  // "VT" / "CT" / "AT"

// Scoring rules for one charge-discharge run.
struct SwitchRules {
    double v_trigger = 3.5;       // VT trigger line, volts
    double soc_trigger = 0.10;    // CT trigger line, on the estimated SoC
    double v_false_alarm = 3.6;   // a trigger above this voltage is premature
    double drop_fraction = 0.33;  // fallen this far from v_initial = depleted
    double v_initial = 0.0;       // no-load reference voltage of a full, fresh battery

    // voltage at/below which the battery counts as already failed
    double depleted_voltage() const { return (1.0 - drop_fraction) * v_initial; }
};

// What a strategy saw at the instant it triggered.
struct StrategyObservation {
    double tau_s = 0.0;   // seconds from run start
    double y = 0.0;       // terminal voltage at the trigger
    double x1_hat = 0.0;  // estimated SoC at the trigger
};

enum class Outcome { Hit, FalseAlarm, Miss };

// Score one run. No trigger before depletion is a Miss. On a trigger:
//   VT: hit if the estimated SoC was at/below the CT line, false alarm if the
//       voltage dip fired while the SoC was still high.
//   CT: false alarm if the voltage was still above v_false_alarm, miss if it
//       had already fallen to the depleted level, hit otherwise.
//   AT: scored like CT, at the switching instant tau_s.
Outcome classify(Strategy strategy, const std::optional<StrategyObservation>& obs,
                 const SwitchRules& rules);

struct OutcomeTally {
    int t = 0;  // total runs
    int h = 0;  // hits
    int f = 0;  // false alarms
    int m = 0;  // missed detections

    double dr() const { return static_cast<double>(h) / t; }
    double far() const { return static_cast<double>(f) / t; }
    double mdr() const { return static_cast<double>(m) / t; }
};

OutcomeTally tally(const std::vector<Outcome>& outcomes);

// CSV columns: strategy, DR, FAR, MDR (rates as fractions)
void write_tally_csv(const std::vector<std::pair<Strategy, OutcomeTally>>& rows,
                     std::ostream& out);

}  // namespace cpsb
