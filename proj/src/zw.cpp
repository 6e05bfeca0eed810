#include "sblt/zw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sblt {

ZFactor::ZFactor(const VFamily& family, const ProfileF& profile, double lambda0)
    : family_(&family), profile_(&profile), lambda0_(lambda0) {
    s_max_ = family.master().tau_end() - 2.0 * std::log(100.0) - 1e-9;
    // envelope constant for the tail bound, measured where the decay has set in
    envelope_c_ = 0.0;
    for (double s : {s_max_ - 2.0, s_max_ - 1.0, s_max_})
        for (double x = -4.0; x <= 4.0; x += 0.125)
            envelope_c_ = std::max(envelope_c_, integrand(s, x) * std::exp(rate() * s));
}

double ZFactor::integrand(double s, double x) const {
    if (s < 0.0) throw std::invalid_argument("ZFactor: s must be >= 0");
    double v = family_->master().value(s + 2.0 * std::log(100.0), x / 1.0);
    double g = (*profile_)(x) - v;
    return g > 0.0 ? g : 0.0;  // monotone family: F >= V, clip scheme noise
}

std::vector<double> ZFactor::along_path(const std::vector<double>& path, double dt) const {
    if (dt <= 0.0) throw std::invalid_argument("ZFactor: dt > 0 required");
    std::vector<double> z(path.size());
    double acc = 0.0;
    double prev = integrand(0.0, path[0]);
    z[0] = 1.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        double s = k * dt;
        if (s > s_max_) s = s_max_;  // integrand below the tail envelope here
        double cur = integrand(s, path[k]);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
        z[k] = std::exp(acc);
    }
    return z;
}

double ZFactor::z_horizon(const std::vector<double>& path, double dt,
                          double* log_tail_bound) const {
    auto z = along_path(path, dt);
    double T = (path.size() - 1) * dt;
    if (log_tail_bound) *log_tail_bound = envelope_c_ / rate() * std::exp(-rate() * std::min(T, s_max_));
    return z.back();
}

double WFactor::integrand(double u, double y, double y0, double z) const {
    const ProfileF& f = table_->profile();
    double second = y - std::exp(0.5 * u) * (z - y0);
    double g = f(y) - (*table_)(y, second);
    return g < 0.0 ? g : 0.0;  // subadditivity: F2 >= F, clip scheme noise
}

std::vector<double> WFactor::along_path(const std::vector<double>& path, double dt,
                                        double z) const {
    if (dt <= 0.0) throw std::invalid_argument("WFactor: dt > 0 required");
    std::vector<double> w(path.size());
    const double y0 = path[0];
    double acc = 0.0;
    double prev = integrand(0.0, path[0], y0, z);
    w[0] = 1.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        double cur = integrand(k * dt, path[k], y0, z);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
        w[k] = std::exp(acc);
    }
    return w;
}

double WFactor::w_infinity(const std::vector<double>& path, double dt, double z) const {
    const double y0 = path[0];
    if (z == y0) return 1.0;  // coincident points: F2(y,y) = F(y)
    double acc = 0.0;
    double prev = integrand(0.0, path[0], y0, z);
    for (std::size_t k = 1; k < path.size(); ++k) {
        double u = k * dt;
        double cur = integrand(u, path[k], y0, z);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
        // once e^{u/2}|z-y0| clears the profile support plus the path range,
        // every remaining integrand value is an F tail beyond ~1e-60
        if (std::exp(0.5 * u) * std::fabs(z - y0) > 18.0 + std::fabs(path[k])) break;
    }
    return std::exp(acc);
}

}  // namespace sblt
