#include "sblt/vsolver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sblt/simd.hpp"

namespace sblt {

namespace {

constexpr double kT0Cap = 1e-4;     // t0 = 1e-4 for lambda <= 1, 1e-4/lambda^2 above
constexpr double kSepResolve = 12.0;  // xi-separation at which bumps are disjoint

inline double gauss1(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779; }

inline double cubic4(double s, double f0, double f1, double f2, double f3) {
    // Lagrange basis on nodes -1,0,1,2 evaluated at s (usually in [0,1])
    double a = -s * (s - 1.0) * (s - 2.0) / 6.0;
    double b = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    double c = -(s + 1.0) * s * (s - 2.0) / 2.0;
    double d = (s + 1.0) * s * (s - 1.0) / 6.0;
    return a * f0 + b * f1 + c * f2 + d * f3;
}

}  // namespace

double SelfSimilarCurve::value(double tau, double xi) const {
    double q = (tau - tau_start) / dtau_out;
    if (q < -0.51 || q > ntau - 1 + 0.51)
        throw std::out_of_range("SelfSimilarCurve: tau outside recorded range");
    q = std::clamp(q, 0.0, static_cast<double>(ntau - 1));
    double p = (xi - xi_min) / dxi;
    if (p < 0.0 || p > nx - 1) return 0.0;

    int ib = std::clamp(static_cast<int>(p) - 1, 0, nx - 4);
    double sx = p - ib - 1;
    auto row_at = [&](int k) {
        const double* s = snapshot(k) + ib;
        return cubic4(sx, s[0], s[1], s[2], s[3]);
    };

    // short runs (near-disjoint starts) may hold fewer than 4 snapshots
    if (ntau == 1) return row_at(0);
    if (ntau < 4) {
        int k0 = std::clamp(static_cast<int>(q), 0, ntau - 2);
        double w = q - k0;
        return (1.0 - w) * row_at(k0) + w * row_at(k0 + 1);
    }
    int kb = std::clamp(static_cast<int>(q) - 1, 0, ntau - 4);
    double st = q - kb - 1;
    return cubic4(st, row_at(kb), row_at(kb + 1), row_at(kb + 2), row_at(kb + 3));
}

SelfSimilarCurve integrate_self_similar(std::vector<double> u0, double xi_min, double dxi,
                                        double tau_start, double tau_end,
                                        const VStepConfig& cfg) {
    const int n = static_cast<int>(u0.size());
    if (n < 8) throw std::invalid_argument("integrate_self_similar: grid too small");
    if (cfg.cfl <= 0.0 || cfg.cfl > 1.0)
        throw std::invalid_argument("integrate_self_similar: need 0 < cfl <= 1 (dtau <= dxi^2)");
    const double xi_max = xi_min + (n - 1) * dxi;
    if (std::max(std::fabs(xi_min), std::fabs(xi_max)) * dxi > 2.0)
        throw std::invalid_argument("integrate_self_similar: advection violates positivity cfl");

    SelfSimilarCurve out;
    out.xi_min = xi_min;
    out.dxi = dxi;
    out.nx = n;
    out.tau_start = tau_start;
    out.dtau_out = cfg.dtau_out;
    out.ntau = static_cast<int>(std::ceil((tau_end - tau_start) / cfg.dtau_out - 1e-9)) + 1;
    out.snaps.reserve(static_cast<std::size_t>(out.ntau) * n);

    const int sub = std::max(1, static_cast<int>(std::ceil(cfg.dtau_out / (cfg.cfl * dxi * dxi))));
    const double dtau = cfg.dtau_out / sub;

    std::vector<double> cm(n), cc(n), cp(n), buf(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double xi = xi_min + i * dxi;
        cm[i] = dtau * (0.5 / (dxi * dxi) - xi / (4.0 * dxi));
        cc[i] = 1.0 - dtau / (dxi * dxi);
        cp[i] = dtau * (0.5 / (dxi * dxi) + xi / (4.0 * dxi));
    }
    const double ra = std::exp(dtau);
    const double rb = 0.5 * (ra - 1.0);

    double init_max = *std::max_element(u0.begin(), u0.end());
    const double ceiling = std::max(4.0, cfg.blowup_factor * init_max);
    const auto& k = simd::kernels();

    u0.front() = 0.0;
    u0.back() = 0.0;
    out.snaps.insert(out.snaps.end(), u0.begin(), u0.end());

    for (int snap = 1; snap < out.ntau; ++snap) {
        for (int s = 0; s < sub; ++s) {
            k.stencil3(buf.data(), u0.data(), cm.data(), cc.data(), cp.data(), n);
            buf.front() = 0.0;
            buf.back() = 0.0;
            k.logistic(buf.data(), n, ra, rb);
            u0.swap(buf);
        }
        double mx = *std::max_element(u0.begin(), u0.end());
        if (!std::isfinite(k.sum(u0.data(), n)) || mx > ceiling) {
            std::ostringstream os;
            os << "integrate_self_similar: blow-up at tau="
               << tau_start + snap * cfg.dtau_out << " max=" << mx << " ceiling=" << ceiling;
            throw std::runtime_error(os.str());
        }
        out.snaps.insert(out.snaps.end(), u0.begin(), u0.end());
    }
    return out;
}

VFamily::VFamily(VStepConfig cfg, double s_max) : cfg_(cfg) {
    const double xi_half = 9.2;
    const int n = 2 * static_cast<int>(std::round(xi_half / cfg.dxi)) + 1;
    std::vector<double> u0(n);
    for (int i = 0; i < n; ++i) u0[i] = 0.01 * gauss1(-xi_half + i * cfg.dxi);
    master_ = integrate_self_similar(std::move(u0), -xi_half, cfg.dxi, 0.0,
                                     s_max + 2.0 * std::log(100.0), cfg_);
}

const SelfSimilarCurve& VFamily::small_curve(double lambda) const {
    auto it = small_.find(lambda);
    if (it != small_.end()) return *it->second;
    const double xi_half = 9.2;
    const int n = 2 * static_cast<int>(std::round(xi_half / cfg_.dxi)) + 1;
    std::vector<double> u0(n);
    double amp = lambda * std::sqrt(kT0Cap);
    for (int i = 0; i < n; ++i) u0[i] = amp * gauss1(-xi_half + i * cfg_.dxi);
    auto curve = std::make_unique<SelfSimilarCurve>(integrate_self_similar(
        std::move(u0), -xi_half, cfg_.dxi, std::log(kT0Cap), 2.2, cfg_));
    return *small_.emplace(lambda, std::move(curve)).first->second;
}

double VFamily::t_max_for(double lambda) const {
    if (lambda < 1.0) return std::exp(2.2);
    return std::exp(master_.tau_end() - 2.0 * std::log(100.0 * lambda));
}

double VFamily::v(double lambda, double t, double x) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("VFamily::v: lambda must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("VFamily::v: t must be positive");
    if (lambda >= 1.0) {
        double tau = std::log(t) + 2.0 * std::log(100.0 * lambda);
        return master_.value(tau, x / std::sqrt(t)) / t;
    }
    const SelfSimilarCurve& c = small_curve(lambda);
    return c.value(std::log(t), x / std::sqrt(t)) / t;
}

double VFamily::v_inf(const ProfileF& f, double t, double x) {
    return f(x / std::sqrt(t)) / t;
}

VSolution v_point(const VFamily& family, double lambda, const std::vector<double>& x_grid,
                  const std::vector<double>& t_grid) {
    VSolution sol;
    sol.lambda1 = lambda;
    sol.source_points = {0.0};
    sol.x_grid = x_grid;
    sol.t_grid = t_grid;
    sol.values.resize(x_grid.size() * t_grid.size());
    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        double t = t_grid[it];
        if (t > family.t_max_for(lambda))
            throw std::invalid_argument("v_point: t beyond the solved horizon for this lambda");
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix)
            sol.values[it * x_grid.size() + ix] = family.v(lambda, t, x_grid[ix]);
    }
    return sol;
}

namespace {

// Initial one-point profile in the frame xi = x/sqrt(t): U^lambda(tau, xi).
double one_point_u(const VFamily& family, const ProfileF& profile, double lambda, double tau,
                   double xi) {
    if (lambda == kVInfinity) return profile(xi);  // fixed point
    if (lambda >= 1.0) return family.master().value(tau + 2.0 * std::log(100.0 * lambda), xi);
    return family.small_curve(lambda).value(tau, xi);
}

struct TwoPointRun {
    SelfSimilarCurve curve;   // frame anchored at source 1
    double tau_m = 0.0;       // earlier times are disjoint
};

// Integrates the pair (lambda1 at xi=0, lambda2 entering at xi-separation 12)
// from tau_m = 2 log(d/12) up to log(t_max).
TwoPointRun run_two_point(const VFamily& family, const ProfileF& profile, double lambda1,
                          double lambda2, double d, double t_max) {
    VStepConfig cfg = family.config();
    cfg.dxi = 0.015;
    const double xi_lo = -10.8, xi_hi = kSepResolve + 10.8;
    const int n = static_cast<int>(std::round((xi_hi - xi_lo) / cfg.dxi)) + 1;

    double tau_m = 2.0 * std::log(d / kSepResolve);
    double t0_shared = kT0Cap / std::pow(std::max(1.0, lambda1 + lambda2), 2);
    std::vector<double> u0(n);
    TwoPointRun run;

    if (lambda1 != kVInfinity && lambda2 != kVInfinity && tau_m < std::log(t0_shared)) {
        // sources closer than the delta-smoothing width: both start as
        // Gaussians on the shared grid (difference in per-source t0 is
        // below the smoothing scale here)
        tau_m = std::log(t0_shared);
        double rt = std::sqrt(t0_shared);
        double sep = d / rt;
        for (int i = 0; i < n; ++i) {
            double xi = xi_lo + i * cfg.dxi;
            u0[i] = rt * (lambda1 * gauss1(xi) + lambda2 * gauss1(xi - sep));
        }
    } else {
        for (int i = 0; i < n; ++i) {
            double xi = xi_lo + i * cfg.dxi;
            u0[i] = one_point_u(family, profile, lambda1, tau_m, xi) +
                    one_point_u(family, profile, lambda2, tau_m, xi - kSepResolve);
        }
    }
    run.tau_m = tau_m;
    run.curve = integrate_self_similar(std::move(u0), xi_lo, cfg.dxi, tau_m,
                                       std::log(t_max) + 1e-12, cfg);
    return run;
}

}  // namespace

VSolution v_two_point(const VFamily& family, const ProfileF& profile, double lambda1,
                      double lambda2, double x1, double x2, const std::vector<double>& x_grid,
                      const std::vector<double>& t_grid) {
    VSolution sol;
    sol.lambda1 = lambda1;
    sol.lambda2 = lambda2;
    sol.source_points = {x1, x2};
    sol.x_grid = x_grid;
    sol.t_grid = t_grid;
    sol.values.resize(x_grid.size() * t_grid.size());

    const double d = std::fabs(x2 - x1);
    const bool mirrored = x2 < x1;
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());

    if (d == 0.0) {
        // coincident masses add exactly
        for (std::size_t it = 0; it < t_grid.size(); ++it)
            for (std::size_t ix = 0; ix < x_grid.size(); ++ix)
                sol.values[it * x_grid.size() + ix] =
                    lambda1 == kVInfinity || lambda2 == kVInfinity
                        ? VFamily::v_inf(profile, t_grid[it], x_grid[ix] - x1)
                        : family.v(lambda1 + lambda2, t_grid[it], x_grid[ix] - x1);
        return sol;
    }

    auto one = [&](double lam, double t, double y) {
        return lam == kVInfinity ? VFamily::v_inf(profile, t, y) : family.v(lam, t, y);
    };

    const double t_disjoint = std::pow(d / kSepResolve, 2);
    TwoPointRun run;
    bool have_run = false;
    if (t_max > t_disjoint) {
        run = run_two_point(family, profile, lambda1, lambda2, d, t_max);
        have_run = true;
    }

    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        double t = t_grid[it];
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            // frame of source 1, with source 2 at +d
            double y = mirrored ? x1 - x_grid[ix] : x_grid[ix] - x1;
            double v;
            if (have_run && std::log(t) >= run.tau_m)
                v = run.curve.value(std::log(t), y / std::sqrt(t)) / t;
            else
                v = one(lambda1, t, y) + one(lambda2, t, y - d);  // still disjoint
            sol.values[it * x_grid.size() + ix] = v;
        }
    }
    return sol;
}

F2Table::F2Table(const VFamily& family, const ProfileF& profile, double lambda0, double d_max,
                 double d_step, std::vector<double> ladder)
    : ladder_(std::move(ladder)), profile_(&profile), lambda0_(lambda0) {
    for (double d = 0.0; d <= d_max + 1e-9; d += d_step) d_grid_.push_back(d);
    y_min_ = -10.5;
    dy_ = 0.025;
    ny_ = static_cast<int>(std::round(2.0 * 10.5 / dy_)) + 1;

    const std::size_t nd = d_grid_.size();
    rung_vals_.assign(ladder_.size(), std::vector<double>(nd * ny_, 0.0));
    vals_direct_.assign(nd * ny_, 0.0);
    vals_.assign(nd * ny_, 0.0);

    for (std::size_t id = 0; id < nd; ++id) {
        double d = d_grid_[id];
        for (std::size_t r = 0; r < ladder_.size(); ++r) {
            double lam = ladder_[r];
            if (d == 0.0) {
                for (int iy = 0; iy < ny_; ++iy)
                    rung_vals_[r][id * ny_ + iy] = family.v(2.0 * lam, 1.0, y_min_ + iy * dy_);
            } else {
                auto run = run_two_point(family, profile, lam, lam, d, 1.0);
                for (int iy = 0; iy < ny_; ++iy)
                    rung_vals_[r][id * ny_ + iy] = run.curve.value(0.0, y_min_ + iy * dy_);
            }
        }
        if (d == 0.0) {
            for (int iy = 0; iy < ny_; ++iy) vals_direct_[id * ny_ + iy] = profile(y_min_ + iy * dy_);
        } else {
            auto run = run_two_point(family, profile, kVInfinity, kVInfinity, d, 1.0);
            for (int iy = 0; iy < ny_; ++iy)
                vals_direct_[id * ny_ + iy] = run.curve.value(0.0, y_min_ + iy * dy_);
        }
    }

    // Richardson in lambda: the gap to the infinite-mass solution decays
    // like lambda^{1-2*lambda0}, so doubling lambda shrinks it by
    // delta = 2^{1-2*lambda0}. The third rung only checks monotonicity.
    const std::size_t R = ladder_.size();
    const double delta = std::pow(2.0, 1.0 - 2.0 * lambda0_);
    for (std::size_t idx = 0; idx < vals_.size(); ++idx) {
        double p1 = rung_vals_[R - 3][idx], p2 = rung_vals_[R - 2][idx], p3 = rung_vals_[R - 1][idx];
        if (p2 < p1 - 1e-9 || p3 < p2 - 1e-9) ++ladder_violations_;
        vals_[idx] = p3 + (p3 - p2) * delta / (1.0 - delta);
    }
}

double F2Table::interp(const std::vector<double>& table, double d, double y) const {
    const int nd = static_cast<int>(d_grid_.size());
    double pd = d / (d_grid_[1] - d_grid_[0]);
    double py = (y - y_min_) / dy_;
    if (py < 0.0 || py > ny_ - 1) {
        // first argument beyond the tabulated window: both tails negligible
        return (*profile_)(-y) + (*profile_)(d - y);
    }
    int kb = std::clamp(static_cast<int>(pd) - 1, 0, nd - 4);
    int ib = std::clamp(static_cast<int>(py) - 1, 0, ny_ - 4);
    double sd = pd - kb - 1, sy = py - ib - 1;
    double rows[4];
    for (int r = 0; r < 4; ++r) {
        const double* s = &table[static_cast<std::size_t>(kb + r) * ny_ + ib];
        rows[r] = cubic4(sy, s[0], s[1], s[2], s[3]);
    }
    return cubic4(sd, rows[0], rows[1], rows[2], rows[3]);
}

double F2Table::operator()(double a, double b) const {
    if (b < a) std::swap(a, b);
    double d = b - a;
    if (d >= d_grid_.back()) return (*profile_)(a) + (*profile_)(b);
    return interp(vals_, d, -a);
}

double F2Table::rung_value(std::size_t rung, double d, double y) const {
    return interp(rung_vals_.at(rung), d, y);
}

double F2Table::direct_inf_value(double d, double y) const { return interp(vals_direct_, d, y); }

std::string F2Table::ladder_report_json() const {
    nlohmann::json j;
    j["separations"] = d_grid_;
    j["ladder"] = ladder_;
    j["ladder_violations"] = ladder_violations_;
    nlohmann::json rows = nlohmann::json::array();
    for (double d : d_grid_) {
        nlohmann::json row;
        row["d"] = d;
        for (std::size_t r = 0; r < ladder_.size(); ++r)
            row["rung_" + std::to_string(static_cast<int>(ladder_[r]))] =
                rung_value(r, d, 0.0);
        row["richardson"] = interp(vals_, d, 0.0);
        row["direct_inf"] = direct_inf_value(d, 0.0);
        rows.push_back(row);
    }
    j["profiles_at_y0"] = rows;
    return j.dump(2);
}

void write_vsolution_csv(const VSolution& sol, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "t,x,V\n";
    os.precision(17);
    for (std::size_t it = 0; it < sol.t_grid.size(); ++it)
        for (std::size_t ix = 0; ix < sol.x_grid.size(); ++ix)
            os << sol.t_grid[it] << ',' << sol.x_grid[ix] << ',' << sol.value(it, ix) << '\n';
}

}  // namespace sblt
