#pragma once
// Path functionals built from the V family and the two-point profile:
//   Z_T(Y) = exp( int_0^T F(Y_s) - V_1^{e^{s/2}}(Y_s) ds )
//   W_S(Y,z) = exp( int_0^S F(Y_u) - F2(Y_u, Y_u - e^{u/2}(z - Y_0)) du )
// Z is nondecreasing in T with a finite limit; W takes values in (0,1].

#include <vector>

#include "sblt/profile_f.hpp"
#include "sblt/vsolver.hpp"

namespace sblt {

class ZFactor {
  public:
    ZFactor(const VFamily& family, const ProfileF& profile, double lambda0);

    // F(x) - V_1^{e^{s/2}}(x); nonnegative, decays like e^{-rate*s}
    double integrand(double s, double x) const;
    double rate() const { return lambda0_ - 0.5; }   // (2*lambda0 - 1)/2
    double horizon() const { return s_max_; }        // table coverage in s

    // Z at the grid times 0, dt, ..., n*dt along the path (trapezoid).
    std::vector<double> along_path(const std::vector<double>& path, double dt) const;

    // Z at the table horizon plus an analytic bound on log Z_inf - log Z_T
    // integrated from the e^{-rate*s} envelope.
    double z_horizon(const std::vector<double>& path, double dt, double* log_tail_bound) const;

    double tail_envelope() const { return envelope_c_; }

  private:
    const VFamily* family_;
    const ProfileF* profile_;
    double lambda0_;
    double s_max_;
    double envelope_c_;  // sup_x integrand(s,x) e^{rate*s} near the horizon
};

class WFactor {
  public:
    explicit WFactor(const F2Table& table) : table_(&table) {}

    // F(Y_u) - F2(Y_u, Y_u - e^{u/2}(z - y0)); nonpositive
    double integrand(double u, double y, double y0, double z) const;

    // W at grid times along the path from Y_0 = path[0].
    std::vector<double> along_path(const std::vector<double>& path, double dt, double z) const;

    // W_inf: the integrand is identically 0 once the second argument has
    // escaped the profile support, so the trapezoid saturates exactly.
    double w_infinity(const std::vector<double>& path, double dt, double z) const;

  private:
    const F2Table* table_;
};

}  // namespace sblt
