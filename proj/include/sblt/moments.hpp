#pragma once
// Closed-form moment formulas for the boundary local time and their
// numerical evaluators: the global constant C and the pair-correlation
// function rho (nested Monte Carlo over immortal paths), first moments
// under the canonical measure and under the superprocess law, and the
// second-moment bound/exact formula with the w -> t e^{-tau} substitution
// that tames the w^{-2 lambda0} singularity.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sblt/profile_f.hpp"
#include "sblt/sbm.hpp"
#include "sblt/spectral.hpp"
#include "sblt/vsolver.hpp"
#include "sblt/zw.hpp"

namespace sblt {

struct ConstantsBundle {
    double C = 0.0;
    double C_stderr = 0.0;
    double theta = 0.0;
    double lambda0 = 0.0;
    // rho on a symmetric grid (values clamped to 1 far off the grid)
    std::vector<double> rho_nodes;
    std::vector<double> rho_values;  // [i*n+j]
    double cz_empirical = 0.0;       // max Z seen over sampled paths
    double cz_bound = 0.0;           // rate-integrated analytic cap
    uint64_t seed = 0;
    long n_paths = 0;

    double rho(double z1, double z2) const;
};

struct MomentReport {
    std::string name;
    double formula_value = 0.0;
    double mc_estimate = 0.0;
    double mc_stderr = 0.0;
    long replicates = 0;
    double z_score = 0.0;
};

std::string moment_report_jsonl(const std::vector<MomentReport>& reports);

// C = E_0^B[ exp(-int_0^1 V_u^1(B_u) du) E^{Y,inf}_{B_1}(Z_inf) psi0(B_1) ].
// Brownian paths use exact increments on a square-graded-then-uniform grid;
// the inner immortal expectation is a small nested sample per path.
struct EstimateCResult {
    double value = 0.0;
    double stderr_mean = 0.0;
    double cz_empirical = 0.0;
    double cz_bound = 0.0;
};
EstimateCResult estimate_c(const ProfileF& profile, const SpectralModel& model,
                           const VFamily& family, long n_paths, uint64_t seed);

// rho(z1,z2) = E^{Y,inf}_{z1}[W_inf(Y,z2)] E^{Y,inf}_{z2}[W_inf(Y,z1)].
double rho_estimate(double z1, double z2, const SpectralModel& model, const F2Table& f2,
                    long n_paths, uint64_t seed);

ConstantsBundle build_constants(const ProfileF& profile, const SpectralModel& model,
                                const VFamily& family, const F2Table& f2, long n_paths,
                                uint64_t seed);

std::string constants_to_json(const ConstantsBundle& b);
ConstantsBundle constants_from_json(const std::string& text);

// N0(L_t(phi)) = C t^{-lambda0} int phi(sqrt(t) z) psi0(z) dm(z)
double canonical_first_moment(const std::function<double(double)>& phi, double t,
                              const ConstantsBundle& bundle, const SpectralModel& model);

// E^X_{X0}(L_t(phi)) with the exp(-(1/t) int F(z + (x0-y0)/sqrt(t)) dX0(y0))
// crowding factor, exact for atomic X0.
double px_first_moment(const std::function<double(double)>& phi, double t,
                       const InitialMeasure& x0, const ProfileF& profile,
                       const ConstantsBundle& bundle, const SpectralModel& model);

// N0(L_t(1)^2) <= C^2 theta^2/(1-lambda0) t^{1-2 lambda0}
double second_moment_mass_bound(double t, const ConstantsBundle& bundle);

// Kernel h(x,y) for pair moments. When h depends only on the separation,
// h(x, x+e) = separation_only(e), the z-sums collapse and evaluation is
// O(nq^2) per tau node. small_sep_exponent zeta declares the blow-up
// h(a, a + eps d) ~ eps^{-2 zeta}, used by the analytic tau tail
// (finiteness requires zeta < 1 - lambda0).
struct PairKernel {
    std::function<double(double, double)> full;
    std::function<double(double)> separation_only;  // optional fast path
    double small_sep_exponent = 0.0;

    static PairKernel mass();
    static PairKernel riesz(double p);  // |x-y|^{-p}, zeta = p/2
};

struct SecondMomentOptions {
    double tail_start = 60.0;  // tau where the psi0-mode extrapolation begins
    int panels = 30;
    int nodes_per_panel = 6;
};

// The upper bound N0((L_t x L_t)(h)) <= C^2 int_0^t w^{-2 lambda0} [...] dw,
// evaluated through the killed transition density and the substitution
// w = t e^{-tau}; analytic psi0-mode tail beyond tail_start.
double second_moment_bound(const PairKernel& h, double t, const SpectralModel& model,
                           const ConstantsBundle& bundle, SecondMomentOptions opts = {});

// The w-space integrand of the bound (for the w -> 0 exponent checks).
double second_moment_bound_integrand(const PairKernel& h, double t, double w,
                                     const SpectralModel& model,
                                     const ConstantsBundle& bundle);

// Exact second moment (canonical measure): s-quadrature via
// s = t(1-e^{-tau}) with Brownian Monte Carlo for the exponential
// functional of V^{inf,inf}; returns mean and stderr from the path noise.
struct ExactSecondMomentResult {
    double value = 0.0;
    double stderr_mean = 0.0;
};
ExactSecondMomentResult exact_second_moment(const PairKernel& h, double t,
                                            const SpectralModel& model,
                                            const ConstantsBundle& bundle, const F2Table& f2,
                                            long n_paths, uint64_t seed);

// E^X_{X0}(L_t(1)^2) <= X0(1) C^2 theta^2/(1-lambda0) t^{1-2 lambda0}
//                       + X0(1)^2 C^2 theta^2 t^{-2 lambda0}
// (Poisson cluster count over the canonical bounds).
double px_second_moment_bound(double t, const InitialMeasure& x0, const ConstantsBundle& bundle);

}  // namespace sblt
