#pragma once
// Small statistics helpers shared by tests, validation suites and the CLI.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sblt {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;   // unbiased
    std::size_t n = 0;
    double stderr_mean() const { return n > 1 ? std::sqrt(var / double(n)) : 0.0; }
};

inline MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    mv.n = xs.size();
    if (mv.n == 0) return mv;
    double s = 0.0;
    for (double x : xs) s += x;
    mv.mean = s / double(mv.n);
    double q = 0.0;
    for (double x : xs) q += (x - mv.mean) * (x - mv.mean);
    mv.var = mv.n > 1 ? q / double(mv.n - 1) : 0.0;
    return mv;
}

inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

inline SlopeFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    SlopeFit f;
    const std::size_t n = xs.size();
    f.slope = fit_slope(xs, ys);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(n);
    my /= double(n);
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss_res = 0, ss_x = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = ys[i] - f.intercept - f.slope * xs[i];
            ss_res += r * r;
            ss_x += (xs[i] - mx) * (xs[i] - mx);
        }
        f.stderr_slope = std::sqrt(ss_res / double(n - 2) / ss_x);
    }
    return f;
}

// Two-sample Kolmogorov-Smirnov statistic. Ties (lattice-valued samples,
// atoms at zero) are handled by advancing both samples through each value.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

// Critical KS distance at significance alpha (asymptotic form);
// c(0.01) = 1.628, c(0.05) = 1.358.
inline double ks_critical(double alpha, std::size_t m, std::size_t n) {
    double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt((double(m) + double(n)) / (double(m) * double(n)));
}

}  // namespace sblt
