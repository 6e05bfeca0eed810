#pragma once
// Semilinear heat family V_t = V''/2 - V^2/2 with one- and two-point-mass
// initial data, solved in self-similar coordinates
//     V_t(x) = t^{-1} U(log t, x/sqrt(t)),
//     dU/dtau = U''/2 + (xi/2) U' + U - U^2/2.
// In these variables F is the fixed point, the Gaussian-smoothed delta
// lambda p_{t0} becomes a fixed-width bump of amplitude lambda sqrt(t0),
// and the whole lambda >= 1 family is one trajectory read at shifted times:
// with t0(lambda) = 1e-4/lambda^2,
//     V_t^lambda(x) = t^{-1} U*(log t + 2 log(100 lambda), x/sqrt(t)).
// Diffusion+advection are stepped explicitly under dtau <= dxi^2; the
// reaction u' = u - u^2/2 is integrated exactly per step (logistic).

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sblt/profile_f.hpp"

namespace sblt {

inline constexpr double kVInfinity = std::numeric_limits<double>::infinity();

struct SelfSimilarCurve {
    double xi_min = 0.0, dxi = 0.0;
    int nx = 0;
    double tau_start = 0.0, dtau_out = 0.0;
    int ntau = 0;                 // snapshots at tau_start + k*dtau_out, k < ntau
    std::vector<double> snaps;    // [k*nx + i]

    double tau_end() const { return tau_start + (ntau - 1) * dtau_out; }
    // bicubic in (tau, xi); 0 outside the xi range; clamps tau to the range
    // within a half output-step, otherwise throws.
    double value(double tau, double xi) const;
    const double* snapshot(int k) const { return &snaps[static_cast<std::size_t>(k) * nx]; }
};

struct VStepConfig {
    double dxi = 0.01;
    double cfl = 0.45;           // dtau = cfl * dxi^2, subdivided to land on outputs
    double dtau_out = 0.0625;    // snapshot spacing
    double blowup_factor = 10.0; // abort when max U exceeds max(4, factor*initial max)
};

// One-point family evaluator: master trajectory for lambda >= 1 plus cached
// per-lambda trajectories for lambda < 1 (t0 capped at 1e-4).
class VFamily {
  public:
    explicit VFamily(VStepConfig cfg = {}, double s_max = 12.5);

    // V_t^lambda(x); lambda > 0, t in (0, t_max_for(lambda)].
    double v(double lambda, double t, double x) const;
    // V_t^infinity(x) = t^{-1} F(x/sqrt(t)) from a profile.
    static double v_inf(const ProfileF& f, double t, double x);

    // Largest usable t for this lambda given the master horizon.
    double t_max_for(double lambda) const;

    const SelfSimilarCurve& master() const { return master_; }
    const SelfSimilarCurve& small_curve(double lambda) const;  // lambda < 1
    const VStepConfig& config() const { return cfg_; }

  private:
    VStepConfig cfg_;
    SelfSimilarCurve master_;
    mutable std::map<double, std::unique_ptr<SelfSimilarCurve>> small_;
};

// Runs the self-similar stepper from an initial profile. Exposed for tests.
SelfSimilarCurve integrate_self_similar(std::vector<double> u0, double xi_min, double dxi,
                                        double tau_start, double tau_end,
                                        const VStepConfig& cfg);

struct VSolution {
    double lambda1 = 0.0, lambda2 = 0.0;      // lambda2 = 0: one-point
    std::vector<double> source_points;        // one or two
    std::vector<double> t_grid, x_grid;
    std::vector<double> values;               // [it*nx + ix]
    double value(std::size_t it, std::size_t ix) const {
        return values[it * x_grid.size() + ix];
    }
};

// One-point evaluation on requested grids (source at the origin).
VSolution v_point(const VFamily& family, double lambda,
                  const std::vector<double>& x_grid, const std::vector<double>& t_grid);

// Two point masses lambda1 at x1 and lambda2 at x2 (kVInfinity for the
// infinite-mass solution, which requires the profile). Returns the full
// spatial solution; the paper's two-point value at (x1,x2) is the profile
// at x = 0. Early disjoint evolution rides the one-point curves; the PDE
// takes over once the bumps are within interaction range.
VSolution v_two_point(const VFamily& family, const ProfileF& profile, double lambda1,
                      double lambda2, double x1, double x2,
                      const std::vector<double>& x_grid, const std::vector<double>& t_grid);

// Tabulated F2(a,b) = V_1^{inf,inf}(a,b), built by Richardson extrapolation
// in lambda over separation profiles P_d(y) = V_1^{(l,l),(0,d)}(y), using
// F2(a,b) = P_{b-a}(-a) for b >= a. Far-separated pairs fall back to
// F(a) + F(b).
class F2Table {
  public:
    F2Table(const VFamily& family, const ProfileF& profile, double lambda0,
            double d_max = 12.0, double d_step = 0.25,
            std::vector<double> ladder = {40.0, 80.0, 160.0});

    double operator()(double a, double b) const;

    // separation profile access (for tests / reports)
    double rung_value(std::size_t rung, double d, double y) const;
    double direct_inf_value(double d, double y) const;
    const std::vector<double>& ladder() const { return ladder_; }
    const std::vector<double>& separations() const { return d_grid_; }
    int ladder_violations() const { return ladder_violations_; }
    std::string ladder_report_json() const;
    const ProfileF& profile() const { return *profile_; }

  private:
    double interp(const std::vector<double>& table, double d, double y) const;
    std::vector<double> d_grid_;
    std::vector<double> ladder_;
    double y_min_ = 0.0, dy_ = 0.0;
    int ny_ = 0;
    std::vector<double> vals_;                      // richardson-extrapolated
    std::vector<double> vals_direct_;               // infinite-mass initialization
    std::vector<std::vector<double>> rung_vals_;    // per ladder rung
    const ProfileF* profile_;
    double lambda0_ = 0.0;
    int ladder_violations_ = 0;
};

inline double f2(double a, double b, const F2Table& table) { return table(a, b); }

void write_vsolution_csv(const VSolution& sol, const std::string& path);

}  // namespace sblt
