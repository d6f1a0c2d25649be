#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

namespace cpsb {

// Equivalent-circuit Li-ion cell: SoC-dependent RC ladder (two transient
// pairs), a series resistance, and a cubic-plus-exponential open-circuit
// voltage. All seven circuit quantities are closed forms in the SoC x1.
struct BatteryParams {
    std::array<double, 21> k{};  // k[0] is k1
    double c_ah = 0.0;           // capacity, ampere-hours
    double f1 = 1.0, f2 = 1.0;   // capacity derating factors, (0, 1]

    void validate() const;  // throws InvalidParams
};

struct BatteryState {
    double x1 = 1.0;  // state of charge, [0, 1]
    double x2 = 0.0;  // volts across the short-transient RC pair
    double x3 = 0.0;  // volts across the long-transient RC pair
};

struct CircuitValues {
    double c_ts = 0.0, c_tl = 0.0;           // farads
    double r_s = 0.0, r_ts = 0.0, r_tl = 0.0;  // ohms
    double e_o = 0.0;                        // volts
    double c_c = 0.0;                        // coulombs
};

CircuitValues circuit_values(double x1, const BatteryParams& p);

struct StateDeriv {
    double dx1 = 0.0, dx2 = 0.0, dx3 = 0.0;  // per second
};

// throws SingularCapacitance when either transient capacitance magnitude is
// below the configured floor (pole of the x2/x3 equations)
StateDeriv derivatives(const BatteryState& s, double i_amps, const BatteryParams& p,
                       double capacitance_floor = 1e-9);

double output_voltage(const BatteryState& s, double i_amps, const BatteryParams& p);

struct IntegrateOptions {
    double capacitance_floor = 1e-9;
    double step_check_tol = 1e-6;  // relative, full step vs two half steps
    bool step_check = true;
    bool clamp_x1 = true;
};

struct TrajectoryPoint {
    double t = 0.0;
    BatteryState state;
    double y = 0.0;  // terminal volts
    double i = 0.0;  // amperes
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::vector<double> clamp_events;  // times where x1 hit a bound
};

// Incremental fixed-step classical 4th-order integrator. Each advance() covers
// one piecewise-constant current segment; steps of at most h, with the segment
// end always landed on exactly. Every step is cross-checked against two half
// steps (the half-step result is kept); disagreement beyond tolerance raises
// StepTooLarge.
class BatteryIntegrator {
public:
    BatteryIntegrator(const BatteryState& s0, double t0, double h, const BatteryParams& p,
                      const IntegrateOptions& opts = {});

    void advance(double t_next, double i_amps);

    const BatteryState& state() const { return state_; }
    double time() const { return t_; }
    double voltage(double i_amps) const;
    const std::vector<double>& clamp_events() const { return clamps_; }

private:
    BatteryState rk4(const BatteryState& s, double i_amps, double dt) const;
    void one_step(double dt, double i_amps);

    BatteryState state_;
    double t_;
    double h_;
    BatteryParams p_;
    IntegrateOptions opts_;
    std::vector<double> clamps_;
    bool clamped_low_ = false;
};

// convenience wrapper sampling every h
Trajectory integrate(const BatteryState& s0, const std::function<double(double)>& current_fn,
                     double t0, double t1, double h, const BatteryParams& p,
                     const IntegrateOptions& opts = {});

// columns: t_s, x1, x2_V, x3_V, y_V, i_A
void write_trajectory_csv(const Trajectory& tr, std::ostream& out);

}  // namespace cpsb
