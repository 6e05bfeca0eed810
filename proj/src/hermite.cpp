#include "sblt/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sblt {

void hermite_values(int count, double x, double* out) {
    if (count <= 0) return;
    out[0] = 1.0;
    if (count == 1) return;
    out[1] = x;
    for (int k = 1; k + 1 < count; ++k)
        out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                     std::sqrt(static_cast<double>(k + 1));
}

void sym_eig(const std::vector<double>& a, int n,
             std::vector<double>& values, std::vector<double>& vectors) {
    std::vector<double> m = a;
    vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vectors[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto at = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * n + j]; };
    auto vt = [&](int i, int j) -> double& { return vectors[static_cast<std::size_t>(i) * n + j]; };

    double fro = 0.0;
    for (double v : m) fro += v * v;
    const double tol = 1e-28 * std::max(fro, 1e-300);

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off <= tol) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (apq == 0.0) continue;
                double app = at(p, p), aqq = at(q, q);
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = vt(k, p), vkq = vt(k, q);
                    vt(k, p) = c * vkp - s * vkq;
                    vt(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = at(i, i);

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return values[i] < values[j]; });

    std::vector<double> sv(n), svec(vectors.size());
    for (int j = 0; j < n; ++j) {
        sv[j] = values[idx[j]];
        for (int i = 0; i < n; ++i) svec[static_cast<std::size_t>(i) * n + j] = vt(i, idx[j]);
    }
    values = std::move(sv);
    vectors = std::move(svec);
}

GaussianMeasureGrid gauss_hermite(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    // Nodes: eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal
    // sqrt(k)), polished by Newton on h_n(x) = 0 using h_n' = sqrt(n) h_{n-1}.
    // Weights: Christoffel function 1 / sum_{k<n} h_k(x)^2, which stays
    // relatively accurate even for the exponentially small extreme weights
    // (eigenvector first components do not).
    const int n = order;
    std::vector<double> jac(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(static_cast<double>(k));
        jac[static_cast<std::size_t>(k - 1) * n + k] = b;
        jac[static_cast<std::size_t>(k) * n + k - 1] = b;
    }
    std::vector<double> values, vectors;
    sym_eig(jac, n, values, vectors);

    GaussianMeasureGrid g;
    g.order = order;
    g.nodes = values;
    g.weights.resize(n);
    std::vector<double> h(n + 1);
    double sqrtn = std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j) {
        double x = g.nodes[j];
        for (int it = 0; it < 8; ++it) {
            hermite_values(n + 1, x, h.data());
            double deriv = sqrtn * h[n - 1];
            double step = h[n] / deriv;
            x -= step;
            if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
        }
        g.nodes[j] = x;
        hermite_values(n, x, h.data());
        double chris = 0.0;
        for (int k = 0; k < n; ++k) chris += h[k] * h[k];
        g.weights[j] = 1.0 / chris;
    }
    // Symmetry of m: enforce exact +/- node pairing.
    for (int j = 0; j < n / 2; ++j) {
        double mag = 0.5 * (std::fabs(g.nodes[j]) + std::fabs(g.nodes[n - 1 - j]));
        g.nodes[j] = -mag;
        g.nodes[n - 1 - j] = mag;
        double w = 0.5 * (g.weights[j] + g.weights[n - 1 - j]);
        g.weights[j] = g.weights[n - 1 - j] = w;
    }
    if (n % 2 == 1) g.nodes[n / 2] = 0.0;
    double total = 0.0;
    for (double w : g.weights) total += w;
    for (double& w : g.weights) w /= total;
    return g;
}

}  // namespace sblt
