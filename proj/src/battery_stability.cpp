#include "cpsb/battery_stability.hpp"

#include <cmath>
#include <string>

#include "cpsb/errors.hpp"

namespace cpsb {

namespace {

void check_capacitances(const CircuitValues& cv, double floor_f) {
    if (std::fabs(cv.c_ts) < floor_f || std::fabs(cv.c_tl) < floor_f)
        throw SingularCapacitance("transient capacitance magnitude below floor");
}

void require_positive_regime(const CircuitValues& cv, double x2, double x3) {
    if (!(x2 > 0.0 && x3 > 0.0))
        throw InvalidRegime("threshold formulas need positive transient voltages");
    if (!(cv.c_ts > 0.0 && cv.c_tl > 0.0 && cv.r_ts > 0.0 && cv.r_tl > 0.0))
        throw InvalidRegime("threshold formulas need positive circuit values");
}

}  // namespace

StabilityThresholds thresholds(const BatteryParams& p) {
    p.validate();
    StabilityThresholds th;
    th.delta1 = -(1.0 / p.k[0]) * std::log(p.k[2] / p.k[3]);
    th.delta2 = -(1.0 / p.k[1]) * std::log(p.k[4] / p.k[5]);
    if (!(th.delta1 > 0.0 && th.delta1 < th.delta2 && th.delta2 < 1.0))
        throw InvalidParams("SoC thresholds fall outside 0 < delta1 < delta2 < 1");
    return th;
}

double v1(const BatteryState& s) { return 0.5 * (s.x2 * s.x2 + s.x3 * s.x3); }

double vdot1(const BatteryState& s, const BatteryParams& p, double capacitance_floor) {
    const CircuitValues cv = circuit_values(s.x1, p);
    check_capacitances(cv, capacitance_floor);
    return -(s.x2 * s.x2 / (cv.r_ts * cv.c_ts) + s.x3 * s.x3 / (cv.r_tl * cv.c_tl));
}

double v2(const BatteryState& s) {
    return 0.5 * (s.x1 * s.x1 + s.x2 * s.x2 + s.x3 * s.x3);
}

double vdot2(const BatteryState& s, double i_amps, const BatteryParams& p,
             double capacitance_floor) {
    const CircuitValues cv = circuit_values(s.x1, p);
    check_capacitances(cv, capacitance_floor);
    return i_amps * (s.x2 / cv.c_ts + s.x3 / cv.c_tl - s.x1 / cv.c_c) -
           (s.x2 * s.x2 / (cv.r_ts * cv.c_ts) + s.x3 * s.x3 / (cv.r_tl * cv.c_tl));
}

double beta(double x2, double x3, double i_amps, const CircuitValues& cv) {
    if (!(i_amps > 0.0)) throw NonpositiveCurrent("beta needs a positive discharge current");
    require_positive_regime(cv, x2, x3);
    const double lin = x2 / cv.c_ts + x3 / cv.c_tl;
    const double quad = x2 * x2 / (cv.r_ts * cv.c_ts) + x3 * x3 / (cv.r_tl * cv.c_tl);
    return cv.c_c * (lin - quad / i_amps);
}

double epsilon_lb(double x2, double x3, const CircuitValues& cv) {
    require_positive_regime(cv, x2, x3);
    const double lin = x2 / cv.c_ts + x3 / cv.c_tl;
    const double quad = x2 * x2 / (cv.r_ts * cv.c_ts) + x3 * x3 / (cv.r_tl * cv.c_tl);
    return quad / lin;
}

double beta_at(double x2, double x3, double i_amps, double x1_eval, const BatteryParams& p) {
    return beta(x2, x3, i_amps, circuit_values(x1_eval, p));
}

double epsilon_lb_at(double x2, double x3, double x1_eval, const BatteryParams& p) {
    return epsilon_lb(x2, x3, circuit_values(x1_eval, p));
}

std::pair<double, double> lti_eigenvalues(double x1, const BatteryParams& p,
                                          double capacitance_floor) {
    const CircuitValues cv = circuit_values(x1, p);
    check_capacitances(cv, capacitance_floor);
    return {-1.0 / (cv.r_ts * cv.c_ts), -1.0 / (cv.r_tl * cv.c_tl)};
}

}  // namespace cpsb
