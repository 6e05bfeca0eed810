#pragma once
// Orthonormal Hermite basis of L^2(m) and Gauss-Hermite quadrature for the
// centred unit-variance Gaussian measure m, plus a dense symmetric
// eigensolver used both here (Golub-Welsch) and by the spectral module.

#include <cstddef>
#include <vector>

namespace sblt {

// Quadrature grid for m: weights are positive and sum to 1; a grid of
// order q integrates polynomials of degree <= 2q-1 exactly against m.
struct GaussianMeasureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

GaussianMeasureGrid gauss_hermite(int order);

// h_0..h_{count-1} at x, orthonormal in L^2(m):
// h_0 = 1, h_1 = x, h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
void hermite_values(int count, double x, double* out);

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n*n).
// On return `values` are ascending and `vectors` holds orthonormal
// eigenvectors as columns (vectors[i*n+j] = component i of eigenvector j).
void sym_eig(const std::vector<double>& a, int n,
             std::vector<double>& values, std::vector<double>& vectors);

}  // namespace sblt
