#pragma once
// Vectorized inner-loop kernels with runtime ISA dispatch.
//
// Every kernel exists in a scalar reference form and (on x86-64 with AVX2)
// a vectorized form. The scalar form is the semantic definition; the
// vectorized forms are equivalence-tested against it. Reductions may
// reassociate, so cross-ISA agreement is to ~1e-13 relative, not bitwise.
// Within one process the dispatch choice is fixed, so runs are reproducible.

#include <cstddef>

namespace sblt::simd {

enum class Isa { scalar, avx2 };

struct Kernels {
    // sum(x), dot(x,y), dot3(x,y,z) = sum_i x[i]*y[i]*z[i]
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*dot3)(const double* x, const double* y, const double* z, std::size_t n);

    // out[i] = u[i] + alpha*(u[i-1] - 2 u[i] + u[i+1]) for i in [1, n-2].
    // out[0] and out[n-1] are not written. out must not alias u.
    void (*heat_step)(double* out, const double* u, std::size_t n, double alpha);

    // out[i] = cm[i]*u[i-1] + cc[i]*u[i] + cp[i]*u[i+1] for i in [1, n-2].
    // out[0] and out[n-1] are not written. out must not alias u.
    void (*stencil3)(double* out, const double* u, const double* cm,
                     const double* cc, const double* cp, std::size_t n);

    // u[i] = a*u[i] / (1 + b*u[i]); exact step of u' = u - u^2/2 when
    // a = e^h, b = (e^h - 1)/2, and of u' = -u^2/2 when a = 1, b = h/2.
    void (*logistic)(double* u, std::size_t n, double a, double b);

    // out[i] = scale * x[i] * exp(-lambda * x[i]); requires x[i] >= 0.
    void (*exp_weight)(double* out, const double* x, std::size_t n,
                       double lambda, double scale);

    // u[i] = max(0, u[i] + sqrt(u[i]*c) * xi[i]); requires u[i] >= 0.
    void (*sqrt_noise_clamp)(double* u, const double* xi, std::size_t n, double c);

    Isa isa;
};

// Scalar reference kernels (always available).
const Kernels& scalar_kernels();

// Best kernels for this machine, chosen once per process. Setting the
// environment variable SBLT_FORCE_SCALAR=1 before first use pins scalar.
const Kernels& kernels();

const char* isa_name(Isa isa);

}  // namespace sblt::simd
