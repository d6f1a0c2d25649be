#pragma once

#include <cstdint>
#include <vector>

#include "cpsb/battery_model.hpp"
#include "cpsb/rng.hpp"

namespace cpsb {

struct PfConfig {
    int m = 1000;                  // particle count
    double proc_std_x1 = 1e-5;     // process noise per step, additive Gaussian
    double proc_std_x2 = 1e-4;     // volts
    double proc_std_x3 = 1e-4;     // volts
    double meas_std = 0.005;       // voltage likelihood std, volts
    std::uint64_t seed = 1;
};

struct Estimate {
    BatteryState x_hat;  // weighted mean, x1 kept in [0, 1]
    double var_x1 = 0.0, var_x2 = 0.0, var_x3 = 0.0;
};

// Bootstrap (sampling-importance-resampling) filter over the battery state.
// Particles propagate with one forward-difference step of the circuit
// dynamics plus process noise; weights come from a Gaussian voltage
// likelihood; systematic resampling fires when the effective sample size
// drops below half the particle count. Deterministic given the seed.
//
// Particle propagation floors the capacitance magnitudes instead of throwing:
// a particle wandering across a capacitance zero is a bad hypothesis to be
// weighted out, not a reason to kill the filter.
class SocParticleFilter {
public:
    SocParticleFilter(const BatteryState& prior_mean, const BatteryState& prior_std,
                      const PfConfig& cfg, const BatteryParams& p);

    // one measurement update; h in seconds
    Estimate step(double y_meas, double i_meas, double h);

    const std::vector<BatteryState>& particles() const { return particles_; }
    const std::vector<double>& weights() const { return weights_; }
    double effective_sample_size() const;
    int resample_count() const { return resamples_; }

private:
    Estimate estimate() const;
    void resample_systematic();

    std::vector<BatteryState> particles_;
    std::vector<double> weights_;
    PfConfig cfg_;
    BatteryParams p_;
    Rng rng_;
    int resamples_ = 0;
};

// estimate trace CSV columns: t_s, x1_hat, x2_hat, x3_hat, var_x1
struct EstimatePoint {
    double t = 0.0;
    Estimate est;
};
void write_estimates_csv(const std::vector<EstimatePoint>& points, std::ostream& out);

}  // namespace cpsb
