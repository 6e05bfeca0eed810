#include "sblt/profile_f.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sblt {

double f_tail_shape(double x) { return std::fabs(x) * std::exp(-0.5 * x * x); }

namespace {

// Solves T z = rhs for tridiagonal T given by (sub, diag, sup); in-place Thomas.
void solve_tridiag(std::vector<double> sub, std::vector<double> diag,
                   std::vector<double> sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

struct Residual {
    std::vector<double> head;  // rows 0..n
    double tail_pin = 0.0;     // row n+1
    double norm = 0.0;
};

Residual residual_of(const std::vector<double>& x, const std::vector<double>& f,
                     double c, double h) {
    const std::size_t n = x.size() - 1;
    Residual r;
    r.head.resize(n + 1);
    r.head[0] = f[0] - c * f_tail_shape(x[0]);
    for (std::size_t i = 1; i < n; ++i)
        r.head[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) +
                    x[i] * (f[i + 1] - f[i - 1]) / (2.0 * h) + f[i] * (2.0 - f[i]);
    r.head[n] = f[n] - c * f_tail_shape(x[n]);
    r.tail_pin = f[n - 1] - c * f_tail_shape(x[n - 1]);
    for (double v : r.head) r.norm = std::max(r.norm, std::fabs(v));
    r.norm = std::max(r.norm, std::fabs(r.tail_pin));
    return r;
}

// One damped Newton run on a fixed grid. Returns false if it stalls.
bool newton_on_grid(const std::vector<double>& x, std::vector<double>& f, double& c,
                    double h, std::string& trace) {
    const std::size_t n = x.size() - 1;
    Residual res = residual_of(x, f, c, h);
    for (int iter = 0; iter < 80; ++iter) {
        if (res.norm < 1e-9) return true;

        std::vector<double> sub(n + 1, 0.0), diag(n + 1, 0.0), sup(n + 1, 0.0);
        diag[0] = 1.0;
        for (std::size_t i = 1; i < n; ++i) {
            sub[i] = 1.0 / (h * h) - x[i] / (2.0 * h);
            diag[i] = -2.0 / (h * h) + 2.0 - 2.0 * f[i];
            sup[i] = 1.0 / (h * h) + x[i] / (2.0 * h);
        }
        diag[n] = 1.0;

        std::vector<double> z1(n + 1), z2(n + 1, 0.0);
        for (std::size_t i = 0; i <= n; ++i) z1[i] = -res.head[i];
        z2[0] = -f_tail_shape(x[0]);
        z2[n] = -f_tail_shape(x[n]);
        solve_tridiag(sub, diag, sup, z1);
        solve_tridiag(sub, diag, sup, z2);

        double dc = (z1[n - 1] + res.tail_pin) / (z2[n - 1] + f_tail_shape(x[n - 1]));

        double alpha = 1.0;
        bool accepted = false;
        for (int damp = 0; damp < 16; ++damp, alpha *= 0.5) {
            std::vector<double> fn(n + 1);
            double cn = c + alpha * dc;
            bool positive = cn > 0.0;
            for (std::size_t i = 0; i <= n && positive; ++i) {
                fn[i] = f[i] + alpha * (z1[i] - dc * z2[i]);
                if (i > 0 && i < n && fn[i] <= 0.0) positive = false;  // rejected step
            }
            if (!positive) continue;
            Residual rn = residual_of(x, fn, cn, h);
            if (rn.norm <= (1.0 - 0.25 * alpha) * res.norm || rn.norm < 1e-9) {
                f = std::move(fn);
                c = cn;
                res = std::move(rn);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (res.norm < 1e-8) return true;  // stalled at the roundoff floor
            std::ostringstream os;
            os << "newton stalled at iter " << iter << " |G|=" << res.norm
               << " alpha_min=" << alpha;
            trace += os.str();
            return false;
        }
    }
    trace += "newton: iteration budget exhausted";
    return res.norm < 1e-9;
}

std::vector<double> make_grid(double half_width, int intervals) {
    std::vector<double> x(intervals + 1);
    double h = 2.0 * half_width / intervals;
    for (int i = 0; i <= intervals; ++i) x[i] = -half_width + h * i;
    // exact symmetry (and exact zero at the midpoint)
    for (int i = 0; i <= intervals / 2; ++i) x[intervals - i] = -x[i];
    return x;
}

}  // namespace

ProfileF solve_f(double half_width, int intervals) {
    if (half_width < 6.0) throw std::invalid_argument("solve_f: half_width must be >= 6");
    if (intervals < 512 || intervals % 2 != 0)
        throw std::invalid_argument("solve_f: intervals must be even and >= 512");

    // Mesh continuation: coarse solve, then refine to the requested grid.
    std::vector<int> levels;
    for (int m = intervals; m >= 1024; m /= 2) levels.push_back(m);
    levels.push_back(512);
    std::reverse(levels.begin(), levels.end());

    std::string trace;
    std::vector<double> f;
    double c = 0.0;
    std::vector<double> xprev;

    for (std::size_t li = 0; li < levels.size(); ++li) {
        int m = levels[li];
        auto x = make_grid(half_width, m);
        double h = 2.0 * half_width / m;
        std::vector<double> fl(m + 1);
        if (li == 0) {
            for (int i = 0; i <= m; ++i) fl[i] = 1.4 * std::exp(-0.5 * x[i] * x[i]);
            c = 1.4;
        } else {
            // linear prolongation from the previous level
            for (int i = 0; i <= m; ++i) {
                double pos = (x[i] - xprev.front()) / (xprev[1] - xprev[0]);
                std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, pos)),
                                                       xprev.size() - 2);
                double t = pos - static_cast<double>(j);
                fl[i] = (1.0 - t) * f[j] + t * f[j + 1];
            }
        }
        if (!newton_on_grid(x, fl, c, h, trace)) {
            // relaxation fallback: explicit pseudo-time marching, then retry
            double dtau = 0.4 * h * h;
            int steps = static_cast<int>(3.0 / dtau);
            for (int s = 0; s < steps; ++s) {
                Residual r = residual_of(x, fl, c, h);
                for (int i = 1; i < m; ++i) fl[i] = std::max(1e-300, fl[i] + dtau * r.head[i]);
                c = fl[m - 1] / f_tail_shape(x[m - 1]);
                fl[0] = c * f_tail_shape(x[0]);
                fl[m] = c * f_tail_shape(x[m]);
            }
            trace += "; relaxed, retrying newton; ";
            if (!newton_on_grid(x, fl, c, h, trace))
                throw std::runtime_error("solve_f: Newton failed (" + trace + ")");
        }
        f = std::move(fl);
        xprev = std::move(x);
    }

    ProfileF out;
    out.half_width = half_width;
    out.dx = 2.0 * half_width / intervals;
    out.grid = std::move(xprev);
    out.values = std::move(f);
    out.c1 = c;
    out.residual_norm = residual_of(out.grid, out.values, c, out.dx).norm;
    for (double v : out.values)
        if (!(v > 0.0)) throw std::runtime_error("solve_f: non-positive profile value");
    return out;
}

double ProfileF::operator()(double x) const {
    double ax = std::fabs(x);
    if (ax >= half_width) return c1 * f_tail_shape(x);
    // 4-point Lagrange interpolation on the uniform grid
    double pos = (x - grid.front()) / dx;
    std::size_t j = static_cast<std::size_t>(pos);
    std::size_t base = (j == 0) ? 0 : std::min(j - 1, grid.size() - 4);
    double t = pos - static_cast<double>(base);
    double c0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    double c1l = t * (t - 2.0) * (t - 3.0) / 2.0;
    double c2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    double c3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    return c0 * values[base] + c1l * values[base + 1] + c2 * values[base + 2] +
           c3 * values[base + 3];
}

void write_profile_csv(const ProfileF& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "x,F,residual\n";
    const std::size_t n = f.grid.size() - 1;
    os.precision(17);
    for (std::size_t i = 0; i <= n; ++i) {
        double res = 0.0;
        if (i > 0 && i < n)
            res = (f.values[i + 1] - 2.0 * f.values[i] + f.values[i - 1]) / (f.dx * f.dx) +
                  f.grid[i] * (f.values[i + 1] - f.values[i - 1]) / (2.0 * f.dx) +
                  f.values[i] * (2.0 - f.values[i]);
        os << f.grid[i] << ',' << f.values[i] << ',' << res << '\n';
    }
}

}  // namespace sblt
