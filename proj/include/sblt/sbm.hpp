#pragma once
// Super-Brownian density simulation: explicit Euler SPDE scheme with
// sqrt(X dt/dx) node noise and clamping (exact zeros), a critical binary
// branching random walk cross-sampler, and the Poisson cluster
// decomposition with small-mass rejection sampling.

#include <cstdint>
#include <string>
#include <vector>

#include "sblt/rng.hpp"

namespace sblt {

struct DensityField {
    double x_left = 0.0;    // coordinate of node 0
    double dx = 0.0;
    std::vector<double> values;   // density, >= 0, exact zeros
    double time = 0.0;
    uint64_t seed = 0;
    std::string scheme;

    double node_x(std::size_t i) const { return x_left + dx * double(i); }
    double mass() const;
    bool extinct() const;
};

struct InitialMeasure {
    std::vector<std::pair<double, double>> atoms;  // (position, mass >= 0)

    static InitialMeasure point(double x, double mass) { return {{{x, mass}}}; }
    double total_mass() const;
    double support_min() const;
    double support_max() const;
};

struct SpdeConfig {
    double dx = 0.02;
    double dt = 0.0;            // 0: use dx*dx/2
    double domain_pad = 0.0;    // extra beyond support +- 6 sqrt(t)
    double fixed_left = 0.0;    // used when fixed_domain is set
    double fixed_right = 0.0;
    bool fixed_domain = false;  // pin the grid (cluster ensembles share one)
    double mass_guard = 100.0;  // abort when mass exceeds guard * X0(1)
};

// Explicit Euler step X += dt/(2dx^2) * Lap X + sqrt(X dt/dx) xi, clamped at
// zero. Atoms enter by a mass-preserving nearest-two-node split. Only the
// active support window is stepped and consumes noise, so runs are
// translation-equivariant: shifting the atoms by whole cells shifts the
// field bit-identically (same seed).
DensityField simulate_spde(const InitialMeasure& x0, double t, const SpdeConfig& cfg,
                           uint64_t seed);

// Critical binary branching random walk: n = particles_per_mass * X0(1)
// particles of mass 1/particles_per_mass, generation step 1/particles_per_mass,
// displacement N(0, 1/particles_per_mass), each particle leaving 0 or 2
// children per generation. Output is a mass histogram on the grid
// (box kernel, bandwidth = dx).
DensityField simulate_brw(const InitialMeasure& x0, double t, long particles_per_mass,
                          const SpdeConfig& cfg, uint64_t seed);

struct ClusterEnsemble {
    long n_clusters = 0;
    std::vector<double> seeds_x;            // cluster starting points
    std::vector<DensityField> clusters;     // on one shared grid
    DensityField total;                     // superposition
    double m0 = 0.0;                        // small starting mass used
    long attempts = 0;                      // rejection attempts
    double acceptance_rate() const;
};

// Poisson(2 X0(1)/t) cluster count; seeds iid from the normalized X0; each
// cluster is a small-mass simulation conditioned on survival (rejection).
// pre: m0 <= 0.05 t.
ClusterEnsemble sample_cluster_decomposition(const InitialMeasure& x0, double t, double m0,
                                             const SpdeConfig& cfg, uint64_t seed);

// CSV (x,value) and a compact binary snapshot:
// little-endian header {n: u64, dx: f64, t: f64, seed: u64}, then n f64.
void write_field_csv(const DensityField& f, const std::string& path);
void write_field_binary(const DensityField& f, const std::string& path);
DensityField read_field_binary(const std::string& path);

}  // namespace sblt
