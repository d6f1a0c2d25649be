#pragma once

#include <utility>

#include "cpsb/battery_model.hpp"

namespace cpsb {

// Lyapunov analysis of the RC subsystem. delta1/delta2 are the SoC values
// where the short- and long-transient capacitances change sign; below delta2
// the linearized dynamics lose stability. beta is the adaptive SoC threshold
// induced by the discharge current, defined for the positive-capacitance
// regime with the circuit values frozen at the evaluation SoC.
struct StabilityThresholds {
    double delta1 = 0.0;
    double delta2 = 0.0;
};

StabilityThresholds thresholds(const BatteryParams& p);

// V1 = (x2^2 + x3^2) / 2 and its time derivative along the RC dynamics
double v1(const BatteryState& s);
double vdot1(const BatteryState& s, const BatteryParams& p, double capacitance_floor = 1e-9);

// V2 = (x1^2 + x2^2 + x3^2) / 2 and its derivative with the charge equation
double v2(const BatteryState& s);
double vdot2(const BatteryState& s, double i_amps, const BatteryParams& p,
             double capacitance_floor = 1e-9);

// adaptive threshold and the current lower bound, on explicit circuit values
double beta(double x2, double x3, double i_amps, const CircuitValues& cv);
double epsilon_lb(double x2, double x3, const CircuitValues& cv);

// circuit values evaluated at the SoC estimate
double beta_at(double x2, double x3, double i_amps, double x1_eval, const BatteryParams& p);
double epsilon_lb_at(double x2, double x3, double x1_eval, const BatteryParams& p);

// diagonal of the frozen-SoC system matrix: (-1/(R_ts C_ts), -1/(R_tl C_tl))
std::pair<double, double> lti_eigenvalues(double x1, const BatteryParams& p,
                                          double capacitance_floor = 1e-9);

}  // namespace cpsb
