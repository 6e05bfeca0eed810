#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "sblt/moments.hpp"
#include "sblt/stats.hpp"

using namespace sblt;

namespace {

const ConstantsBundle& bundle() {
    static const ConstantsBundle b =
        build_constants(fixtures::profile(), fixtures::model_f(), fixtures::vfamily(),
                        fixtures::f2table(), 10000, 20240807);
    return b;
}

}  // namespace

TEST_CASE("constant C: positive, below the analytic cap") {
    const auto& b = bundle();
    CHECK(b.C / b.C_stderr > 5.0);
    // E_0^B psi0(B_1) = integral of psi0 against m = theta, so C <= C_Z theta
    CHECK(b.C <= b.cz_bound * b.theta + 3.0 * b.C_stderr);
    CHECK(b.cz_empirical <= b.cz_bound * (1.0 + 1e-9));
    CHECK(b.cz_empirical > 1.0);
    MESSAGE("C=", b.C, " +- ", b.C_stderr, "  C_Z: empirical=", b.cz_empirical,
            " bound=", b.cz_bound, "  C*theta=", b.C * b.theta);
}

TEST_CASE("rho: range, symmetry, far separation") {
    const auto& b = bundle();
    const std::size_t n = b.rho_nodes.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double r = b.rho_values[i * n + j];
            CHECK(r > 0.0);
            CHECK(r <= 1.0 + 1e-12);
            CHECK(r == b.rho_values[j * n + i]);  // exact by construction
        }
    CHECK(b.rho(0.0, 0.0) == 1.0);

    double far = rho_estimate(0.0, 6.0, fixtures::model_f(), fixtures::f2table(), 400, 99);
    CHECK(std::fabs(far - 1.0) <= 0.01);
    // nearby points decorrelate: rho < 1 visibly
    CHECK(b.rho(0.0, 0.375) < 0.95);
    MESSAGE("rho(0, 0.375)=", b.rho(0.0, 0.375), " rho(0,6)=", far);
}

TEST_CASE("canonical first moment formula") {
    const auto& b = bundle();
    const auto& m = fixtures::model_f();
    auto one = [](double) { return 1.0; };
    for (double t : {0.5, 1.0, 2.0}) {
        double v = canonical_first_moment(one, t, b, m);
        double want = b.C * std::pow(t, -b.lambda0) * b.theta;
        CHECK(v == doctest::Approx(want).epsilon(1e-8));
    }
    // scaling in t is exactly the prefactor
    double r = canonical_first_moment(one, 2.0, b, m) / canonical_first_moment(one, 1.0, b, m);
    CHECK(r == doctest::Approx(std::pow(2.0, -b.lambda0)).epsilon(1e-12));
}

TEST_CASE("superprocess first moment: small mass and crowding") {
    const auto& b = bundle();
    const auto& m = fixtures::model_f();
    const auto& f = fixtures::profile();
    auto one = [](double) { return 1.0; };

    double eps = 1e-3;
    double v = px_first_moment(one, 1.0, InitialMeasure::point(0.0, eps), f, b, m);
    CHECK(v == doctest::Approx(eps * b.C * b.theta).epsilon(5e-3));

    // crowding reduces the local time: unit mass < the linearized value
    double v1 = px_first_moment(one, 1.0, InitialMeasure::point(0.0, 1.0), f, b, m);
    CHECK(v1 < b.C * b.theta);
    CHECK(v1 > 0.0);

    // translation invariance of the total mass
    double v_shift = px_first_moment(one, 1.0, InitialMeasure::point(3.0, 1.0), f, b, m);
    CHECK(v_shift == doctest::Approx(v1).epsilon(1e-12));
}

TEST_CASE("second moment mass bound closed form") {
    const auto& b = bundle();
    double t1 = second_moment_mass_bound(1.0, b);
    CHECK(t1 == doctest::Approx(b.C * b.C * b.theta * b.theta / (1.0 - b.lambda0)));
    // 1 - 2 lambda0 < 0: decreasing in t
    CHECK(second_moment_mass_bound(2.0, b) < t1);
    CHECK(second_moment_mass_bound(0.5, b) > t1);
}

TEST_CASE("second moment bound collapses to the closed form at h = 1") {
    const auto& b = bundle();
    const auto& m = fixtures::model_f();
    auto h = PairKernel::mass();
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        double v = second_moment_bound(h, t, m, b);
        double want = second_moment_mass_bound(t, b);
        CHECK(std::fabs(v - want) / want <= 1e-4);
    }
}

TEST_CASE("energy-kernel bound: finiteness and scaling exponents") {
    const auto& b = bundle();
    const auto& m = fixtures::model_f();
    const double p = 0.15;
    auto hp = PairKernel::riesz(p);

    double v1 = second_moment_bound(hp, 1.0, m, b);
    CHECK(std::isfinite(v1));
    CHECK(v1 > 0.0);

    // w -> 0: integrand ~ w^{-lambda0 - p/2}
    std::vector<double> lw, li;
    for (double w : {1e-6, 1e-5, 1e-4}) {
        lw.push_back(std::log(w));
        li.push_back(std::log(second_moment_bound_integrand(hp, 1.0, w, m, b)));
    }
    double wslope = fit_slope(lw, li);
    CHECK(std::fabs(wslope - (-(b.lambda0 + 0.5 * p))) <= 0.05);

    // t-scaling of the full bound: t^{1 - 2 lambda0 - p/2}
    std::vector<double> lt, lv;
    for (double t : {0.5, 1.0, 2.0}) {
        lt.push_back(std::log(t));
        lv.push_back(std::log(second_moment_bound(hp, t, m, b)));
    }
    double tslope = fit_slope(lt, lv);
    CHECK(std::fabs(tslope - (1.0 - 2.0 * b.lambda0 - 0.5 * p)) <= 0.05);
    MESSAGE("w-exponent=", wslope, " t-exponent=", tslope);

    // above the dimension threshold the kernel is rejected
    auto hbad = PairKernel::riesz(0.9);
    CHECK_THROWS(second_moment_bound(hbad, 1.0, m, b));
}

TEST_CASE("exact second moment: finite and dominated by the bound") {
    const auto& b = bundle();
    const auto& m = fixtures::model_f();
    auto h = PairKernel::mass();
    auto r = exact_second_moment(h, 1.0, m, b, fixtures::f2table(), 10000, 321);
    CHECK(std::isfinite(r.value));
    CHECK(r.value > 0.0);
    double bound = second_moment_bound(h, 1.0, m, b);
    CHECK(r.value <= bound * (1.0 + 3.0 * r.stderr_mean / r.value));
    MESSAGE("exact N0(L_1(1)^2)=", r.value, " +- ", r.stderr_mean, "  bound=", bound);
}

TEST_CASE("superprocess second moment bound") {
    const auto& b = bundle();
    CHECK(px_second_moment_bound(1.0, InitialMeasure::point(0, 0.0), b) == 0.0);
    double v1 = px_second_moment_bound(1.0, InitialMeasure::point(0, 1.0), b);
    double v2 = px_second_moment_bound(1.0, InitialMeasure::point(0, 2.0), b);
    CHECK(v2 / v1 > 2.0);
    CHECK(v2 / v1 < 4.0);
}

TEST_CASE("constants bundle json round-trip") {
    const auto& b = bundle();
    auto back = constants_from_json(constants_to_json(b));
    CHECK(back.C == b.C);
    CHECK(back.theta == b.theta);
    CHECK(back.rho_values == b.rho_values);
    CHECK(back.n_paths == b.n_paths);
}
