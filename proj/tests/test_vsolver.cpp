#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "fixtures.hpp"
#include "sblt/vsolver.hpp"

using namespace sblt;

namespace {

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("self-similar stepper rejects bad configs") {
    std::vector<double> u0(101, 0.1);
    VStepConfig cfg;
    cfg.cfl = 1.5;  // dtau > dxi^2
    CHECK_THROWS(integrate_self_similar(u0, -0.5, 0.01, 0.0, 1.0, cfg));
    VStepConfig ok;
    CHECK_THROWS(integrate_self_similar(std::vector<double>(4, 0.1), 0.0, 0.01, 0.0, 1.0, ok));
    std::vector<double> bad(101, 0.1);
    bad[50] = std::nan("");
    CHECK_THROWS(integrate_self_similar(bad, -0.5, 0.01, 0.0, 1.0, ok));
}

TEST_CASE("master curve: bounds, monotone in tau, converges to F") {
    const VFamily& fam = fixtures::vfamily();
    const SelfSimilarCurve& m = fam.master();
    const ProfileF& f = fixtures::profile();

    double global_max = 0.0;
    for (double v : m.snaps) {
        CHECK(v >= 0.0);
        global_max = std::max(global_max, v);
    }
    CHECK(global_max <= 2.0 + 1e-6);

    // pointwise monotone in tau (the lambda-monotonicity along the family)
    for (int k = 1; k < m.ntau; k += 37)
        for (int i = 0; i < m.nx; i += 13)
            CHECK(m.snapshot(k)[i] >= m.snapshot(k - 1)[i] - 1e-9);

    // U approaches F from below at the lambda^{1-2 lambda0} rate, i.e. in
    // tau like e^{-(2 lambda0 - 1) tau / 2}; check the decay and the level.
    auto gap_at = [&](double tau) {
        double worst = 0.0;
        for (double x = -6.0; x <= 6.0; x += 0.05)
            worst = std::max(worst, f(x) - m.value(tau, x));
        return worst;
    };
    double g_end = gap_at(m.tau_end());
    double g_mid = gap_at(m.tau_end() - 4.0);
    CHECK(g_end > 0.0);
    CHECK(g_end <= 0.05);
    CHECK(g_end / g_mid <= 0.35);  // e^{-0.776*2} ~ 0.21 plus slack
    MESSAGE("sup gap to F: end=", g_end, " mid=", g_mid, " ratio=", g_end / g_mid);
}

TEST_CASE("one-point scaling identity") {
    const VFamily& fam = fixtures::vfamily();
    SUBCASE("on the master family (lambda, r, t, x) = (2, 1, 0.25, 0.5)") {
        double lhs = fam.v(2.0, 0.25, 0.5);
        double rhs = 4.0 * fam.v(1.0, 1.0, 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-3));
    }
    SUBCASE("across independent trajectories (lambda, r) = (2, 0.3)") {
        double lhs = fam.v(0.6, 0.25, 0.5);
        double rhs = 4.0 * fam.v(0.3, 1.0, 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-3));
        MESSAGE("cross-curve scaling rel err = ", std::fabs(lhs - rhs) / rhs);
    }
}

TEST_CASE("small-lambda solution is the linearized heat evolution") {
    const VFamily& fam = fixtures::vfamily();
    const double lam = 0.01;
    double bound = 0.02 * lam * 0.3989422804014327;  // 0.02 * lambda * p_1(0)
    for (double x = -4.0; x <= 4.0; x += 0.25) {
        double p = std::exp(-0.5 * x * x) * 0.3989422804014327;
        CHECK(std::fabs(fam.v(lam, 1.0, x) - lam * p) <= bound);
    }
}

TEST_CASE("large-lambda convergence rate to the infinite-mass profile") {
    const VFamily& fam = fixtures::vfamily();
    const ProfileF& f = fixtures::profile();
    std::vector<double> ls, lg;
    for (double lam : {10.0, 20.0, 40.0, 80.0}) {
        double gap = 0.0;
        for (double x = -6.0; x <= 6.0; x += 0.05) {
            double g = f(x) - fam.v(lam, 1.0, x);
            CHECK(g >= -1e-5);  // V^lambda below V^inf
            gap = std::max(gap, g);
        }
        ls.push_back(std::log(lam));
        lg.push_back(std::log(gap));
    }
    double slope = fit_slope(ls, lg);
    double want = 1.0 - 2.0 * fixtures::model_f().lambda0();
    CHECK(std::fabs(slope - want) <= 0.1);
    MESSAGE("one-point gap exponent: fitted=", slope, " expected=", want);
}

TEST_CASE("comparison principle: V nondecreasing in lambda") {
    const VFamily& fam = fixtures::vfamily();
    for (double t : {0.5, 1.0})
        for (double x = -3.0; x <= 3.0; x += 0.5) {
            double v03 = fam.v(0.3, t, x);
            double v06 = fam.v(0.6, t, x);
            double v1 = fam.v(1.0, t, x);
            double v10 = fam.v(10.0, t, x);
            CHECK(v03 >= 0.0);
            CHECK(v06 >= v03 - 1e-9);
            CHECK(v1 >= v06 - 1e-9);
            CHECK(v10 >= v1 - 1e-9);
            CHECK(v10 <= 2.0 / t + 1e-6);
        }
}

TEST_CASE("grid refinement changes V marginally") {
    VStepConfig coarse;
    coarse.dxi = 0.02;
    VFamily fam_coarse(coarse, 4.8);
    const VFamily& fam = fixtures::vfamily();
    double a = fam_coarse.v(10.0, 1.0, 0.0);
    double b = fam.v(10.0, 1.0, 0.0);
    CHECK(std::fabs(a - b) / b < 5e-4);
}

TEST_CASE("v_point fills requested grids and validates horizon") {
    const VFamily& fam = fixtures::vfamily();
    std::vector<double> xg, tg = {0.5, 1.0, 2.0};
    for (double x = -3.0; x <= 3.0; x += 0.25) xg.push_back(x);
    auto sol = v_point(fam, 5.0, xg, tg);
    CHECK(sol.values.size() == xg.size() * tg.size());
    for (std::size_t it = 0; it < tg.size(); ++it)
        for (std::size_t ix = 0; ix < xg.size(); ++ix) {
            CHECK(sol.value(it, ix) >= 0.0);
            CHECK(sol.value(it, ix) <= 2.0 / tg[it] + 1e-6);
        }
    CHECK_THROWS(v_point(fam, 400.0, xg, {1e6}));

    char path[] = "/tmp/sblt_vsol_XXXXXX.csv";
    std::snprintf(path, sizeof(path), "/tmp/sblt_vsol_%d.csv", 1);
    write_vsolution_csv(sol, path);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,x,V");
    std::remove(path);
}

TEST_CASE("two-point: coincident masses add exactly") {
    const VFamily& fam = fixtures::vfamily();
    const ProfileF& f = fixtures::profile();
    std::vector<double> xg, tg = {1.0};
    for (double x = -2.0; x <= 2.0; x += 0.25) xg.push_back(x);
    auto two = v_two_point(fam, f, 3.0, 5.0, 0.7, 0.7, xg, tg);
    for (std::size_t ix = 0; ix < xg.size(); ++ix)
        CHECK(two.value(0, ix) ==
              doctest::Approx(fam.v(8.0, 1.0, xg[ix] - 0.7)).epsilon(1e-6));
}

TEST_CASE("two-point: subadditivity and monotonicity") {
    const VFamily& fam = fixtures::vfamily();
    const ProfileF& f = fixtures::profile();
    std::vector<double> xg, tg = {0.5, 1.0};
    for (double x = -4.0; x <= 5.0; x += 0.2) xg.push_back(x);
    auto two = v_two_point(fam, f, 5.0, 20.0, 0.0, 1.2, xg, tg);
    for (std::size_t it = 0; it < tg.size(); ++it)
        for (std::size_t ix = 0; ix < xg.size(); ++ix) {
            double t = tg[it], x = xg[ix];
            double v1 = fam.v(5.0, t, x);
            double v2 = fam.v(20.0, t, x - 1.2);
            CHECK(two.value(it, ix) <= v1 + v2 + 1e-5);
            CHECK(two.value(it, ix) >= std::max(v1, v2) - 1e-3);  // cross-discretization slack
        }
}

TEST_CASE("two-point ladder converges at the one-point exponent") {
    const F2Table& tab = fixtures::f2table();
    double want = 1.0 - 2.0 * fixtures::model_f().lambda0();
    for (double d : {0.5, 1.5}) {
        std::vector<double> ls, lg;
        for (std::size_t r = 0; r < tab.ladder().size(); ++r) {
            double gap = 0.0;
            for (double y = -4.0; y <= 4.0 + d; y += 0.1)
                gap = std::max(gap, tab.direct_inf_value(d, y) - tab.rung_value(r, d, y));
            ls.push_back(std::log(tab.ladder()[r]));
            lg.push_back(std::log(gap));
        }
        double slope = fit_slope(ls, lg);
        CHECK(std::fabs(slope - want) <= 0.1);
        MESSAGE("two-point gap exponent at d=", d, ": ", slope);
    }
}

TEST_CASE("infinite-mass solutions respect the survival ceiling") {
    // V^inf_t <= 2/t and V^{inf,inf}_t <= 2/t, i.e. F <= 2 and F2 <= 2
    const ProfileF& f = fixtures::profile();
    const F2Table& tab = fixtures::f2table();
    for (double x = -8.0; x <= 8.0; x += 0.05) CHECK(f(x) <= 2.0 + 1e-9);
    for (double a = -4.0; a <= 4.0; a += 0.5)
        for (double d = 0.0; d <= 11.5; d += 0.5) CHECK(tab(a, a + d) <= 2.0 + 1e-6);
}

TEST_CASE("f2 table: diagonal, subadditivity, far separation") {
    const F2Table& tab = fixtures::f2table();
    const ProfileF& f = fixtures::profile();
    CHECK(tab.ladder_violations() == 0);

    for (double x : {0.0, 1.0, 2.0})
        CHECK(std::fabs(tab(x, x) - f(x)) <= 1e-3);

    for (double a = -2.0; a <= 2.0; a += 0.5)
        for (double b = a; b <= a + 6.0; b += 0.75) {
            CHECK(tab(a, b) <= f(a) + f(b) + 1e-5);
            CHECK(tab(a, b) >= std::max(f(a), f(b)) - 4e-3);  // extrapolation residual slack
            CHECK(tab(a, b) == tab(b, a));
        }

    CHECK(std::fabs(tab(0.0, 8.0) - f(0.0)) <= 2e-3);

    // richardson vs direct infinite-mass initialization
    double worst = 0.0;
    for (double d : {0.5, 1.0, 2.0, 4.0})
        for (double y = -3.0; y <= 3.0; y += 0.25)
            worst = std::max(worst, std::fabs(tab(-y, d - y) - tab.direct_inf_value(d, y)));
    CHECK(worst <= 5e-3);
    MESSAGE("max |richardson - direct| = ", worst);

    auto rep = tab.ladder_report_json();
    CHECK(rep.find("ladder_violations") != std::string::npos);
}
