#include "sblt/rng.hpp"

#include <cmath>

namespace sblt {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27; z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Doornik-style ziggurat for the standard normal, 128 blocks.
struct ZigTable {
    static constexpr int kBlocks = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;
    double x[kBlocks + 1];
    double ratio[kBlocks];

    ZigTable() {
        double f = std::exp(-0.5 * kR * kR);
        x[0] = kV / f;
        x[1] = kR;
        x[kBlocks] = 0.0;
        for (int i = 2; i < kBlocks; ++i) {
            double prev = x[i - 1];
            x[i] = std::sqrt(-2.0 * std::log(kV / prev + std::exp(-0.5 * prev * prev)));
        }
        for (int i = 0; i < kBlocks; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

const ZigTable& zig() {
    static const ZigTable t;
    return t;
}

}  // namespace

uint64_t splitmix64_next(uint64_t& state) {
    state += kGolden;
    return mix64(state);
}

Rng::Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
}

uint64_t derive_seed(uint64_t root_seed, uint64_t counter) {
    return mix64(root_seed + (counter + 1) * kGolden);
}

Rng Rng::stream(uint64_t root_seed, uint64_t counter) {
    return Rng(derive_seed(root_seed, counter));
}

uint64_t Rng::next_u64() {
    uint64_t* s = s_;
    uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Rng::uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double Rng::uniform_signed() { return ((next_u64() >> 10) + 0.5) * 0x1.0p-53 - 1.0; }

double Rng::normal() {
    const ZigTable& t = zig();
    for (;;) {
        double u = uniform_signed();
        unsigned i = static_cast<unsigned>(next_u64() & 0x7F);
        if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
        if (i == 0) {
            // tail beyond R, Marsaglia's method
            double a, b;
            do {
                a = std::log(uniform_open()) / ZigTable::kR;
                b = std::log(uniform_open());
            } while (-2.0 * b < a * a);
            return u < 0.0 ? a - ZigTable::kR : ZigTable::kR - a;
        }
        double xv = u * t.x[i];
        double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - xv * xv));
        double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - xv * xv));
        if (f1 + uniform() * (f0 - f1) < 1.0) return xv;
    }
}

double Rng::exponential() { return -std::log(uniform_open()); }

long Rng::poisson(double mean) {
    // Knuth product method; means used in this project are O(10).
    double limit = std::exp(-mean);
    double p = 1.0;
    long k = 0;
    do {
        ++k;
        p *= uniform_open();
    } while (p > limit);
    return k - 1;
}

double Rng::gamma(double shape) {
    // Marsaglia-Tsang squeeze for shape >= 1
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

void Rng::fill_normal(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal();
}

}  // namespace sblt
