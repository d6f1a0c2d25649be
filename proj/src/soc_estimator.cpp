#include "cpsb/soc_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "cpsb/errors.hpp"

namespace cpsb {

namespace {

constexpr double kCapFloor = 1e-9;

double floored(double c) {
    if (std::fabs(c) >= kCapFloor) return c;
    return c < 0.0 ? -kCapFloor : kCapFloor;
}

}  // namespace

SocParticleFilter::SocParticleFilter(const BatteryState& prior_mean, const BatteryState& prior_std,
                                     const PfConfig& cfg, const BatteryParams& p)
    : cfg_(cfg), p_(p), rng_(cfg.seed) {
    if (cfg.m < 1) throw InvalidParams("particle count must be at least 1");
    p_.validate();
    particles_.resize(static_cast<std::size_t>(cfg.m));
    weights_.assign(static_cast<std::size_t>(cfg.m), 1.0 / cfg.m);
    for (auto& pt : particles_) {
        pt.x1 = std::clamp(rng_.normal(prior_mean.x1, prior_std.x1), 0.0, 1.0);
        pt.x2 = rng_.normal(prior_mean.x2, prior_std.x2);
        pt.x3 = rng_.normal(prior_mean.x3, prior_std.x3);
    }
}

Estimate SocParticleFilter::step(double y_meas, double i_meas, double h) {
    if (!(h > 0.0)) throw InvalidParams("sampling interval must be positive");
    const double inv_two_var = 1.0 / (2.0 * cfg_.meas_std * cfg_.meas_std);
    double weight_sum = 0.0;

    for (std::size_t m = 0; m < particles_.size(); ++m) {
        BatteryState& pt = particles_[m];
        const CircuitValues cv = circuit_values(pt.x1, p_);
        const double c_ts = floored(cv.c_ts);
        const double c_tl = floored(cv.c_tl);
        pt.x1 += h * (-i_meas / cv.c_c) + rng_.normal(0.0, cfg_.proc_std_x1);
        pt.x2 += h * (-pt.x2 / (cv.r_ts * c_ts) + i_meas / c_ts) +
                 rng_.normal(0.0, cfg_.proc_std_x2);
        pt.x3 += h * (-pt.x3 / (cv.r_tl * c_tl) + i_meas / c_tl) +
                 rng_.normal(0.0, cfg_.proc_std_x3);
        pt.x1 = std::clamp(pt.x1, 0.0, 1.0);

        const CircuitValues cv_post = circuit_values(pt.x1, p_);
        const double y_pred = cv_post.e_o - pt.x2 - pt.x3 - i_meas * cv_post.r_s;
        const double d = y_meas - y_pred;
        const double w = weights_[m] * std::exp(-d * d * inv_two_var);
        weights_[m] = w;
        weight_sum += w;
    }

    if (!(weight_sum > 0.0) || !std::isfinite(weight_sum))
        throw WeightCollapse("all particle likelihoods underflowed");
    for (double& w : weights_) w /= weight_sum;

    if (effective_sample_size() < 0.5 * static_cast<double>(cfg_.m)) resample_systematic();
    return estimate();
}

double SocParticleFilter::effective_sample_size() const {
    double sq = 0.0;
    for (const double w : weights_) sq += w * w;
    return 1.0 / sq;
}

void SocParticleFilter::resample_systematic() {
    const std::size_t m = particles_.size();
    std::vector<BatteryState> next(m);
    const double step = 1.0 / static_cast<double>(m);
    double u = rng_.uniform01() * step;
    double cum = weights_[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < m; ++i) {
        while (cum < u && j + 1 < m) cum += weights_[++j];
        next[i] = particles_[j];
        u += step;
    }
    particles_ = std::move(next);
    weights_.assign(m, step);
    ++resamples_;
}

Estimate SocParticleFilter::estimate() const {
    Estimate est;
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    for (std::size_t i = 0; i < particles_.size(); ++i) {
        m1 += weights_[i] * particles_[i].x1;
        m2 += weights_[i] * particles_[i].x2;
        m3 += weights_[i] * particles_[i].x3;
    }
    est.x_hat = {std::clamp(m1, 0.0, 1.0), m2, m3};
    for (std::size_t i = 0; i < particles_.size(); ++i) {
        const double d1 = particles_[i].x1 - m1;
        const double d2 = particles_[i].x2 - m2;
        const double d3 = particles_[i].x3 - m3;
        est.var_x1 += weights_[i] * d1 * d1;
        est.var_x2 += weights_[i] * d2 * d2;
        est.var_x3 += weights_[i] * d3 * d3;
    }
    return est;
}

void write_estimates_csv(const std::vector<EstimatePoint>& points, std::ostream& out) {
    out << "t_s,x1_hat,x2_hat,x3_hat,var_x1\n";
    char buf[64];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const EstimatePoint& pt : points) {
        out << fmt(pt.t) << ',' << fmt(pt.est.x_hat.x1) << ',' << fmt(pt.est.x_hat.x2) << ','
            << fmt(pt.est.x_hat.x3) << ',' << fmt(pt.est.var_x1) << '\n';
    }
}

}  // namespace cpsb
