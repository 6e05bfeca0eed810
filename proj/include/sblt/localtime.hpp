#pragma once
// Approximating local-time measures L^lambda_t, zero-set boundary
// extraction, box-counting dimension, energy integrals, and the cluster
// recombination identity.

#include <cstddef>
#include <string>
#include <vector>

#include "sblt/sbm.hpp"

namespace sblt {

struct GridMeasure {
    double x_left = 0.0;
    double dx = 0.0;
    std::vector<double> weights;  // mass per node, >= 0
    double lambda_used = 0.0;

    double total() const;
    double node_x(std::size_t i) const { return x_left + dx * double(i); }
};

// weights_j = lambda^{2 lambda0} X_j e^{-lambda X_j} dx
GridMeasure l_lambda(const DensityField& field, double lambda, double lambda0);

struct BoundarySet {
    double x_left = 0.0;
    double dx = 0.0;
    std::vector<std::size_t> indices;  // X = 0 with a positive neighbor
};

BoundarySet boundary_set(const DensityField& field);

// Median of the strictly positive density values (the per-field scale used
// to anchor the lambda ladder).
double positive_density_median(const DensityField& field);

// Ladder doubling up to the resolution ceiling 1/(4 dx <X>), stopped early
// once successive totals differ by under rel_tol; the last iterate is the
// local-time estimate. <X> defaults to the per-field positive-density
// median; ensemble studies pass their pooled scale instead, which removes
// the selection bias of the per-field anchor.
struct LocalTimeEstimate {
    GridMeasure measure;
    std::vector<double> lambdas;
    std::vector<double> totals;
    bool converged = false;
};

LocalTimeEstimate estimate_local_time(const DensityField& field, double lambda0,
                                      double rel_tol = 0.02, int max_rungs = 14,
                                      double density_scale = 0.0);

// Ensemble estimate on one pooled ladder: the rung maximizing the ensemble
// mean total balances continuum convergence (from below) against the
// quanta-truncation decay (from above); per-field totals are reported at
// that rung. Extinct fields contribute zero.
struct EnsembleLocalTime {
    double lambda_star = 0.0;
    std::vector<double> lambdas;
    std::vector<double> mean_totals;
    std::vector<double> totals;  // per field, at lambda_star
};
EnsembleLocalTime ensemble_local_time(const std::vector<DensityField>& fields, double lambda0);

// Moves every node's weight to the nearest boundary-set node, producing a
// measure supported exactly on the discrete zero-set boundary (the
// recombination identity is node-exact for such measures).
GridMeasure project_to_boundary(const GridMeasure& mu, const DensityField& field);

struct BoxDimensionFit {
    std::vector<double> scales;
    std::vector<long> counts;
    double slope = 0.0;
    double stderr_slope = 0.0;
    std::size_t fit_lo = 0, fit_hi = 0;  // window [fit_lo, fit_hi)
    bool reliable = true;                // false when too few points
};

// pre: scales span >= 2 decades inside [4 dx, domain/8]. The fit window
// drops the two smallest scales (grid contamination) and the largest
// (domain effects).
BoxDimensionFit box_dimension(const BoundarySet& points, std::vector<double> scales);
std::string box_dimension_json(const BoxDimensionFit& fit);

// sum_{j != k} w_j w_k |x_j - x_k|^{-p} plus the within-cell closed form
// dx^{-p} 2/((1-p)(2-p)) sum_j w_j^2; pre: p in (0,1).
double energy_integral(const GridMeasure& mu, double p);

// Both forms of the cluster recombination identity; they agree node-exactly
// for measures supported on their cluster's zero set and the result carries
// the common value. Throws if the grids mismatch or the forms differ.
GridMeasure recombine(const ClusterEnsemble& ensemble,
                      const std::vector<GridMeasure>& cluster_measures);

void write_measure_csv(const GridMeasure& mu, const std::string& path);

}  // namespace sblt
