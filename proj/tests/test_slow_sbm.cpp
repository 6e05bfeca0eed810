// Long-running sampler validations at their full stated sizes.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "sblt/localtime.hpp"
#include "sblt/rng.hpp"
#include "sblt/sbm.hpp"
#include "sblt/stats.hpp"

using namespace sblt;

TEST_CASE("brw at n=1e4 matches the spde sampler (2000 replicates each)") {
    SpdeConfig cfg;
    cfg.dx = 0.02;
    const int reps = 2000;
    const long ppm = 10000;
    const double t = 1.0;
    std::vector<double> brw_mass, spde_mass;
    int extinct = 0;
    for (int r = 0; r < reps; ++r) {
        auto f = simulate_brw(InitialMeasure::point(0, 1), t, ppm, cfg, derive_seed(7100, r));
        brw_mass.push_back(f.mass());
        extinct += f.extinct();
        spde_mass.push_back(
            simulate_spde(InitialMeasure::point(0, 1), t, cfg, derive_seed(7200, r)).mass());
    }
    auto mv = mean_var(brw_mass);
    CHECK(std::fabs(mv.mean - 1.0) <= 3.0 * mv.stderr_mean());
    double m4 = 0.0;
    for (double m : brw_mass) m4 += std::pow(m - mv.mean, 4);
    m4 /= reps;
    CHECK(std::fabs(mv.var - t) <= 5.0 * std::sqrt((m4 - mv.var * mv.var) / reps));

    double p = std::exp(-2.0 / t);
    double phat = double(extinct) / reps;
    CHECK(std::fabs(phat - p) <= 3.0 * std::sqrt(p * (1 - p) / reps));

    double d = ks_statistic(brw_mass, spde_mass);
    CHECK(d <= ks_critical(0.01, brw_mass.size(), spde_mass.size()));
    MESSAGE("brw mean=", mv.mean, " var=", mv.var, " extinct=", phat, " KS=", d);
}

TEST_CASE("cluster count over 5000 draws and conditional cluster mass") {
    SpdeConfig cfg;
    cfg.dx = 0.04;  // the Poisson count is resolution-independent
    const double t = 1.0, m0 = 0.01;
    std::vector<double> counts, masses;
    for (int r = 0; r < 5000; ++r) {
        auto ens = sample_cluster_decomposition(InitialMeasure::point(0, 1), t, m0, cfg,
                                                derive_seed(7300, r));
        counts.push_back(double(ens.n_clusters));
        for (auto& c : ens.clusters) masses.push_back(c.mass());
    }
    auto cv = mean_var(counts);
    CHECK(std::fabs(cv.mean - 2.0) <= 3.0 * cv.stderr_mean());
    CHECK(std::fabs(cv.var - 2.0) <= 5.0 * cv.var * std::sqrt(2.0 / counts.size()));

    auto mv = mean_var(masses);
    CHECK(std::fabs(mv.mean - t / 2.0) <= 3.0 * mv.stderr_mean() + 2.0 * m0);
    MESSAGE("E[N]=", cv.mean, " Var[N]=", cv.var, " cluster mass=", mv.mean,
            " (n=", masses.size(), ")");
}

TEST_CASE("energy ladder: finite below the dimension threshold, growing above") {
    const double l0 = fixtures::model_f().lambda0();
    SpdeConfig cfg;
    cfg.dx = 0.01;
    std::vector<DensityField> fields;
    double medsum = 0.0;
    for (int r = 0; static_cast<int>(fields.size()) < 150; ++r) {
        auto f = simulate_spde(InitialMeasure::point(0, 1), 1.0, cfg, derive_seed(7400, r));
        if (f.extinct()) continue;
        medsum += positive_density_median(f);
        fields.push_back(std::move(f));
    }
    double base = 1.0 / (4.0 * cfg.dx * (medsum / fields.size()));
    auto ladder_mean = [&](double p, double mult) {
        double acc = 0.0;
        for (auto& f : fields) acc += energy_integral(l_lambda(f, mult * base, l0), p);
        return acc / double(fields.size());
    };
    std::vector<double> e15, e35;
    for (double mult : {0.25, 0.5, 1.0, 2.0}) {
        e15.push_back(ladder_mean(0.15, mult));
        e35.push_back(ladder_mean(0.35, mult));
    }
    // p = 0.15 < 2 - 2 lambda0: stable along the ladder
    CHECK(e15.back() / e15.front() < 1.3);
    // p = 0.35 > 2 - 2 lambda0: grows along the ladder
    for (std::size_t i = 1; i < e35.size(); ++i) CHECK(e35[i] > e35[i - 1]);
    CHECK(e35.back() / e35.front() > 1.3);
    MESSAGE("energy p=0.15: ", e15.front(), " -> ", e15.back(), "; p=0.35: ", e35.front(),
            " -> ", e35.back());
}

TEST_CASE("atomlessness proxy: max node share falls under refinement") {
    const double l0 = fixtures::model_f().lambda0();
    auto median_share = [&](double dx, uint64_t seed) {
        SpdeConfig cfg;
        cfg.dx = dx;
        std::vector<double> shares;
        for (int r = 0; static_cast<int>(shares.size()) < 80; ++r) {
            auto f = simulate_spde(InitialMeasure::point(0, 1), 1.0, cfg, derive_seed(seed, r));
            if (f.extinct()) continue;
            auto est = estimate_local_time(f, l0);
            double mx = *std::max_element(est.measure.weights.begin(),
                                          est.measure.weights.end());
            shares.push_back(mx / est.measure.total());
        }
        std::nth_element(shares.begin(), shares.begin() + shares.size() / 2, shares.end());
        return shares[shares.size() / 2];
    };
    double coarse = median_share(0.04, 7500);
    double fine = median_share(0.01, 7600);
    CHECK(fine < coarse);
    MESSAGE("median max-node share: dx=0.04: ", coarse, "  dx=0.01: ", fine);
}

TEST_CASE("grid refinement leaves the extinction estimate within mc error") {
    const double t = 1.0;
    const int reps = 1500;
    auto extinct_rate = [&](double dx, uint64_t seed) {
        SpdeConfig cfg;
        cfg.dx = dx;
        int e = 0;
        for (int r = 0; r < reps; ++r)
            e += simulate_spde(InitialMeasure::point(0, 1), t, cfg, derive_seed(seed, r))
                     .extinct();
        return double(e) / reps;
    };
    double p1 = extinct_rate(0.04, 7700);
    double p2 = extinct_rate(0.02, 7800);
    double se = std::sqrt(2.0 * 0.135 * 0.865 / reps);
    CHECK(std::fabs(p1 - p2) <= 3.0 * se);
    MESSAGE("extinction: dx=0.04: ", p1, "  dx=0.02: ", p2);
}
