#pragma once
// Seeded RNG streams for reproducible Monte Carlo.
//
// Engine is xoshiro256++ seeded through SplitMix64. Replicate streams are
// derived from a root seed by a counter-based split: stream k of root s is
// an independent engine whose state depends only on (s, k), so replicates
// can run in any order (or in parallel) and reproduce bit-identically.

#include <cstddef>
#include <cstdint>

namespace sblt {

uint64_t splitmix64_next(uint64_t& state);

// Counter-based stream split; Rng(derive_seed(root, k)) == Rng::stream(root, k).
uint64_t derive_seed(uint64_t root_seed, uint64_t counter);

class Rng {
  public:
    explicit Rng(uint64_t seed);

    // Counter-based split: independent stream `counter` of `root_seed`.
    static Rng stream(uint64_t root_seed, uint64_t counter);

    uint64_t next_u64();
    double uniform();       // [0, 1)
    double uniform_open();  // (0, 1)
    double uniform_signed();// (-1, 1)
    double normal();        // ziggurat, exact N(0,1)
    double exponential();   // rate 1
    long poisson(double mean);
    double gamma(double shape);  // unit scale, shape >= 1 (Marsaglia-Tsang)

    void fill_normal(double* out, std::size_t n);

  private:
    uint64_t s_[4];
};

}  // namespace sblt
