#pragma once
// Eigenproblem for the Ornstein-Uhlenbeck generator with Markovian killing,
// A^phi f = (f'' - x f')/2 - phi f, in the orthonormal Hermite basis of
// L^2(m). A is diagonal there (A h_n = -(n/2) h_n), so only the killing
// matrix needs quadrature. Eigenvalues are stored as killed rates
// lambda_n >= 0 (spectrum of -A^phi).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sblt/hermite.hpp"
#include "sblt/profile_f.hpp"
#include "sblt/rng.hpp"

namespace sblt {

struct KillingFunction {
    std::function<double(double)> rate;  // >= 0, units 1/time
    double limit_neg = 0.0;              // declared limit at -inf
    double limit_pos = 0.0;              // declared limit at +inf
};

KillingFunction zero_killing();
KillingFunction constant_killing(double c);
KillingFunction scaled_profile_killing(const ProfileF& f, double scale = 1.0);

// rate >= 0 on samples and rate(+-{8,12,16}) near declared limits.
void validate_killing(const KillingFunction& kill, double limit_tol = 1e-2);

struct SpectralModel {
    int basis_size = 0;
    std::vector<double> eigenvalues;   // ascending killed rates
    std::vector<double> eigvec_rows;   // [i*nb+j]: coeff of h_i in psi_j
    std::vector<double> eigvec_cols;   // [j*nb+i]: same, transposed layout
    double theta = 0.0;                // integral of psi_0 against m
    double domain_bound = 0.0;         // sqrt(2*basis_size)
    int quadrature_order = 0;
    GaussianMeasureGrid quad;

    double lambda0() const { return eigenvalues[0]; }
    double spectral_gap() const { return eigenvalues[1] - eigenvalues[0]; }

    // psi_0..psi_{nb-1} at x (|x| <= domain_bound enforced by callers).
    void psi_values(double x, double* out) const;
    double psi0(double x) const;

    // The killing rate reconstructed from the spectrum: since A^phi 1 = -phi,
    // phi(x) = sum_n lambda_n <1, psi_n> psi_n(x) within the resolved span.
    double killing_at(double x) const;
};

// Smallest time for which the truncated eigenexpansion of q_t is trusted.
inline constexpr double kMinExpansionTime = 0.05;

SpectralModel build_generator(const KillingFunction& kill, int basis_size,
                              int quadrature_order);

struct DensityResult {
    double value = 0.0;
    double tail_estimate = 0.0;
    bool flagged = false;
};

// q_t(x,y) with respect to m; pre: t >= kMinExpansionTime, |x|,|y| in domain.
double transition_density(const SpectralModel& m, double t, double x, double y);
DensityResult transition_density_ex(const SpectralModel& m, double t, double x, double y);

// P_x(rho^phi > t), equals 1 at t = 0.
double survival_probability(const SpectralModel& m, double x, double t);

// Doob-transformed kernel q~_t(x,y) = q_t(x,y) psi0(y)/psi0(x) e^{lambda0 t}.
double immortal_transition_density(const SpectralModel& m, double t, double x, double y);

// Markov chain on the quadrature nodes with the q~_dt kernel; the first step
// leaves from the off-grid start point. Rows are inverse-CDF sampled.
class ImmortalChain {
  public:
    ImmortalChain(const SpectralModel& m, double dt);
    // path[0] = x0, then nsteps node values; deterministic given rng state.
    std::vector<double> sample_path(double x0, int nsteps, Rng& rng) const;
    const std::vector<double>& nodes() const { return nodes_; }

  private:
    int first_index(double x0, double u) const;
    double row_weight_small_dt(double x, double kill_x, double psi0_x, int k) const;
    std::vector<double> nodes_;
    std::vector<double> cdf_rows_;  // [i*n+k]: CDF of kernel from node i
    std::vector<double> psi0_nodes_;
    std::vector<double> kill_nodes_;
    const SpectralModel* model_;
    double dt_;
    bool small_dt_ = false;
};

std::vector<double> sample_immortal_path(const SpectralModel& m, double x0,
                                         double horizon, double dt, uint64_t seed);

// JSON round-trip: {basis_size, eigenvalues[], eigvec_matrix (row-major),
// theta, domain_bound, quadrature_order}.
std::string spectral_model_to_json(const SpectralModel& m);
SpectralModel spectral_model_from_json(const std::string& text);

}  // namespace sblt
