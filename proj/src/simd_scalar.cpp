#include "sblt/simd.hpp"

#include <algorithm>
#include <cmath>

namespace sblt::simd {
namespace {

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot3_scalar(const double* x, const double* y, const double* z, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i] * z[i];
    return acc;
}

void heat_step_scalar(double* out, const double* u, std::size_t n, double alpha) {
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = u[i] + alpha * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
}

void stencil3_scalar(double* out, const double* u, const double* cm,
                     const double* cc, const double* cp, std::size_t n) {
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = cm[i] * u[i - 1] + cc[i] * u[i] + cp[i] * u[i + 1];
}

void logistic_scalar(double* u, std::size_t n, double a, double b) {
    for (std::size_t i = 0; i < n; ++i) u[i] = a * u[i] / (1.0 + b * u[i]);
}

void exp_weight_scalar(double* out, const double* x, std::size_t n,
                       double lambda, double scale) {
    for (std::size_t i = 0; i < n; ++i) out[i] = scale * x[i] * std::exp(-lambda * x[i]);
}

void sqrt_noise_clamp_scalar(double* u, const double* xi, std::size_t n, double c) {
    for (std::size_t i = 0; i < n; ++i)
        u[i] = std::max(0.0, u[i] + std::sqrt(u[i] * c) * xi[i]);
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        sum_scalar,     dot_scalar,      dot3_scalar,
        heat_step_scalar, stencil3_scalar, logistic_scalar,
        exp_weight_scalar, sqrt_noise_clamp_scalar,
        Isa::scalar,
    };
    return k;
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "?";
}

}  // namespace sblt::simd
