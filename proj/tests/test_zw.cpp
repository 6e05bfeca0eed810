#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "sblt/rng.hpp"
#include "sblt/stats.hpp"
#include "sblt/zw.hpp"

using namespace sblt;

namespace {

const ZFactor& zfactor() {
    static const ZFactor z(fixtures::vfamily(), fixtures::profile(),
                           fixtures::model_f().lambda0());
    return z;
}

std::vector<std::vector<double>> sample_paths(int count, double dt, int nsteps, double x0,
                                              uint64_t seed) {
    ImmortalChain chain(fixtures::model_f(), dt);
    Rng rng(seed);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(chain.sample_path(x0, nsteps, rng));
    return out;
}

}  // namespace

TEST_CASE("z factor: unit start, monotone in horizon, positive integrand") {
    const ZFactor& z = zfactor();
    const double dt = 0.0625;
    auto paths = sample_paths(50, dt, 160, 0.3, 515);
    for (auto& p : paths) {
        auto zs = z.along_path(p, dt);
        CHECK(zs[0] == 1.0);
        for (std::size_t k = 1; k < zs.size(); ++k) CHECK(zs[k] >= zs[k - 1]);
        CHECK(zs.back() < 1e3);  // finite limit (C_Z)
    }
    for (double s : {0.0, 1.0, 5.0, 9.0})
        for (double x : {-2.0, 0.0, 1.5}) CHECK(z.integrand(s, x) >= 0.0);
}

TEST_CASE("z factor: tail decays at the (2 lambda0 - 1)/2 rate") {
    const ZFactor& z = zfactor();
    const double dt = 0.0625;
    const int nsteps = static_cast<int>(z.horizon() / dt) - 1;
    auto paths = sample_paths(100, dt, nsteps, 0.0, 99);
    std::vector<double> ts, mean_log_tail;
    for (double T : {2.0, 4.0, 6.0, 8.0}) {
        double acc = 0.0;
        int cnt = 0;
        std::size_t kT = static_cast<std::size_t>(T / dt);
        for (auto& p : paths) {
            auto zs = z.along_path(p, dt);
            double tail = std::log(zs.back()) - std::log(zs[kT]);
            CHECK(tail <= z.tail_envelope() / z.rate() * std::exp(-z.rate() * T) + 1e-12);
            if (tail > 0.0) {
                acc += std::log(tail);
                ++cnt;
            }
        }
        ts.push_back(T);
        mean_log_tail.push_back(acc / cnt);
    }
    double slope = fit_slope(ts, mean_log_tail);
    CHECK(std::fabs(slope + z.rate()) <= 0.12);
    MESSAGE("z tail slope=", slope, " -rate=", -z.rate());
}

TEST_CASE("w factor: range, coincident start, far separation") {
    WFactor w(fixtures::f2table());
    const double dt = 0.0625;
    auto paths = sample_paths(60, dt, 200, 0.0, 2024);

    for (auto& p : paths) {
        // integrand is nonpositive, so W lives in (0,1] and is nonincreasing
        for (double zpt : {0.5, -1.0, 2.0}) {
            auto ws = w.along_path(p, dt, zpt);
            CHECK(ws[0] == 1.0);
            for (std::size_t k = 1; k < ws.size(); ++k) {
                CHECK(ws[k] <= ws[k - 1] + 1e-15);
                CHECK(ws[k] > 0.0);
                CHECK(ws[k] <= 1.0);
            }
            CHECK(w.w_infinity(p, dt, zpt) > 0.0);
        }
        CHECK(w.w_infinity(p, dt, p[0]) == 1.0);  // z = Y_0: integrand vanishes
    }

    // |z - Y0| = 4: the second argument escapes at rate e^{u/2}, so
    // 1 - W_inf is controlled by the F-tail bound int F(4 e^{u/2} - |Y|sup) du
    // per path (plus the F2-table noise floor); for typical paths that bound
    // is below 5e-3, checked on the median.
    const ProfileF& f = fixtures::profile();
    std::vector<double> winfs;
    for (auto& p : paths) {
        double ysup = 0.0;
        for (double y : p) ysup = std::max(ysup, std::fabs(y));
        double bound = 0.0;
        for (double u = 0.0; u < 12.0; u += 0.01) {
            double arg = 4.0 * std::exp(0.5 * u) - ysup;
            if (arg > 20.0) break;
            bound += 0.01 * f(arg);
        }
        double winf = w.w_infinity(p, dt, 4.0);
        winfs.push_back(winf);
        CHECK(1.0 - winf <= bound + 8e-3);
    }
    std::sort(winfs.begin(), winfs.end());
    double median = winfs[winfs.size() / 2];
    CHECK(median >= 1.0 - 5e-3);
    MESSAGE("W_inf at separation 4: median=", median, " min=", winfs.front());
}
