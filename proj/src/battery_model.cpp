#include "cpsb/battery_model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "cpsb/errors.hpp"

namespace cpsb {

void BatteryParams::validate() const {
    for (std::size_t i = 0; i < k.size(); ++i)
        if (!(k[i] > 0.0))
            throw InvalidParams("k" + std::to_string(i + 1) + " must be positive");
    if (!(k[0] < k[1] && k[1] < k[2] && k[2] < k[3] && k[3] < k[4] && k[4] < k[5]))
        throw InvalidParams("capacitance constants must satisfy k1 < k2 < ... < k6");
    if (!((1.0 / k[0]) * std::log(k[2] / k[3]) > (1.0 / k[1]) * std::log(k[4] / k[5])))
        throw InvalidParams("capacitance constants order the SoC thresholds the wrong way");
    if (!(c_ah > 0.0)) throw InvalidParams("capacity must be positive");
    if (!(f1 > 0.0 && f1 <= 1.0 && f2 > 0.0 && f2 <= 1.0))
        throw InvalidParams("f1 and f2 must lie in (0, 1]");
}

CircuitValues circuit_values(double x1, const BatteryParams& p) {
    CircuitValues cv;
    cv.c_ts = -p.k[3] * std::exp(-p.k[0] * x1) + p.k[2];
    cv.c_tl = -p.k[5] * std::exp(-p.k[1] * x1) + p.k[4];
    cv.r_s = p.k[6] * std::exp(-p.k[7] * x1) + p.k[8];
    cv.r_ts = p.k[9] * std::exp(-p.k[10] * x1) + p.k[11];
    cv.r_tl = p.k[12] * std::exp(-p.k[13] * x1) + p.k[14];
    cv.e_o = -p.k[15] * std::exp(-p.k[16] * x1) + p.k[17] + p.k[18] * x1 - p.k[19] * x1 * x1 +
             p.k[20] * x1 * x1 * x1;
    cv.c_c = 3600.0 * p.c_ah * p.f1 * p.f2;
    return cv;
}

StateDeriv derivatives(const BatteryState& s, double i_amps, const BatteryParams& p,
                       double capacitance_floor) {
    const CircuitValues cv = circuit_values(s.x1, p);
    if (std::fabs(cv.c_ts) < capacitance_floor || std::fabs(cv.c_tl) < capacitance_floor)
        throw SingularCapacitance("transient capacitance vanishes near x1 = " +
                                  std::to_string(s.x1));
    StateDeriv d;
    d.dx1 = -i_amps / cv.c_c;
    d.dx2 = -s.x2 / (cv.r_ts * cv.c_ts) + i_amps / cv.c_ts;
    d.dx3 = -s.x3 / (cv.r_tl * cv.c_tl) + i_amps / cv.c_tl;
    return d;
}

double output_voltage(const BatteryState& s, double i_amps, const BatteryParams& p) {
    const CircuitValues cv = circuit_values(s.x1, p);
    return cv.e_o - s.x2 - s.x3 - i_amps * cv.r_s;
}

BatteryIntegrator::BatteryIntegrator(const BatteryState& s0, double t0, double h,
                                     const BatteryParams& p, const IntegrateOptions& opts)
    : state_(s0), t_(t0), h_(h), p_(p), opts_(opts) {
    if (!(h > 0.0)) throw InvalidParams("integration step must be positive");
    p_.validate();
}

BatteryState BatteryIntegrator::rk4(const BatteryState& s, double i_amps, double dt) const {
    const auto f = [&](const BatteryState& v) {
        return derivatives(v, i_amps, p_, opts_.capacitance_floor);
    };
    const StateDeriv k1 = f(s);
    const StateDeriv k2 = f({s.x1 + 0.5 * dt * k1.dx1, s.x2 + 0.5 * dt * k1.dx2,
                             s.x3 + 0.5 * dt * k1.dx3});
    const StateDeriv k3 = f({s.x1 + 0.5 * dt * k2.dx1, s.x2 + 0.5 * dt * k2.dx2,
                             s.x3 + 0.5 * dt * k2.dx3});
    const StateDeriv k4 = f({s.x1 + dt * k3.dx1, s.x2 + dt * k3.dx2, s.x3 + dt * k3.dx3});
    BatteryState out;
    out.x1 = s.x1 + dt / 6.0 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1);
    out.x2 = s.x2 + dt / 6.0 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2);
    out.x3 = s.x3 + dt / 6.0 * (k1.dx3 + 2.0 * k2.dx3 + 2.0 * k3.dx3 + k4.dx3);
    return out;
}

void BatteryIntegrator::one_step(double dt, double i_amps) {
    BatteryState next = rk4(state_, i_amps, dt);
    if (opts_.step_check) {
        const BatteryState mid = rk4(state_, i_amps, 0.5 * dt);
        BatteryState fine = rk4(mid, i_amps, 0.5 * dt);
        const double err = std::max(
            {std::fabs(next.x1 - fine.x1) / std::max(1.0, std::fabs(fine.x1)),
             std::fabs(next.x2 - fine.x2) / std::max(1.0, std::fabs(fine.x2)),
             std::fabs(next.x3 - fine.x3) / std::max(1.0, std::fabs(fine.x3))});
        if (err > opts_.step_check_tol)
            throw StepTooLarge("half-step disagreement " + std::to_string(err) + " at t = " +
                               std::to_string(t_));
        next = fine;
    }
    if (opts_.clamp_x1) {
        const bool below = next.x1 < 0.0;
        const bool above = next.x1 > 1.0;
        if (below || above) {
            next.x1 = below ? 0.0 : 1.0;
            if (!clamped_low_) clamps_.push_back(t_ + dt);
            clamped_low_ = true;
        } else {
            clamped_low_ = false;
        }
    }
    state_ = next;
    t_ += dt;
}

void BatteryIntegrator::advance(double t_next, double i_amps) {
    if (t_next < t_) throw OutOfDomain("integrator cannot run backwards");
    const double span = t_next - t_;
    if (span <= 0.0) return;
    const auto n_steps = static_cast<long long>(std::ceil(span / h_ - 1e-12));
    const double dt = span / static_cast<double>(std::max(1LL, n_steps));
    for (long long j = 0; j < std::max(1LL, n_steps); ++j) one_step(dt, i_amps);
    t_ = t_next;  // land exactly, absorbing accumulated rounding
}

double BatteryIntegrator::voltage(double i_amps) const {
    return output_voltage(state_, i_amps, p_);
}

Trajectory integrate(const BatteryState& s0, const std::function<double(double)>& current_fn,
                     double t0, double t1, double h, const BatteryParams& p,
                     const IntegrateOptions& opts) {
    if (!(t1 > t0)) throw OutOfDomain("integration interval is empty");
    BatteryIntegrator integ(s0, t0, h, p, opts);
    Trajectory tr;
    const auto n_samples = static_cast<long long>(std::floor((t1 - t0) / h + 1e-9));
    double t = t0;
    for (long long k = 0; k <= n_samples; ++k) {
        const double i_now = current_fn(t);
        tr.points.push_back({t, integ.state(), integ.voltage(i_now), i_now});
        const double t_next = (k == n_samples) ? t1 : t0 + static_cast<double>(k + 1) * h;
        if (t_next > t) integ.advance(t_next, i_now);
        t = t_next;
    }
    if (t > tr.points.back().t) {
        const double i_now = current_fn(t);
        tr.points.push_back({t, integ.state(), integ.voltage(i_now), i_now});
    }
    tr.clamp_events = integ.clamp_events();
    return tr;
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& out) {
    out << "t_s,x1,x2_V,x3_V,y_V,i_A\n";
    char buf[64];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const TrajectoryPoint& pt : tr.points) {
        out << fmt(pt.t) << ',' << fmt(pt.state.x1) << ',' << fmt(pt.state.x2) << ','
            << fmt(pt.state.x3) << ',' << fmt(pt.y) << ',' << fmt(pt.i) << '\n';
    }
}

}  // namespace cpsb
