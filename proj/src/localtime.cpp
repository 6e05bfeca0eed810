#include "sblt/localtime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sblt/simd.hpp"
#include "sblt/stats.hpp"

namespace sblt {

double GridMeasure::total() const {
    return simd::kernels().sum(weights.data(), weights.size());
}

GridMeasure l_lambda(const DensityField& field, double lambda, double lambda0) {
    if (!(lambda > 0.0)) throw std::invalid_argument("l_lambda: lambda > 0 required");
    if (!(lambda0 > 0.5) || !(lambda0 < 1.0))
        throw std::invalid_argument("l_lambda: lambda0 must lie in (1/2, 1)");
    GridMeasure mu;
    mu.x_left = field.x_left;
    mu.dx = field.dx;
    mu.lambda_used = lambda;
    mu.weights.resize(field.values.size());
    double scale = std::pow(lambda, 2.0 * lambda0) * field.dx;
    simd::kernels().exp_weight(mu.weights.data(), field.values.data(), field.values.size(),
                               lambda, scale);
    return mu;
}

BoundarySet boundary_set(const DensityField& field) {
    BoundarySet b;
    b.x_left = field.x_left;
    b.dx = field.dx;
    const auto& v = field.values;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) continue;
        bool left = j > 0 && v[j - 1] > 0.0;
        bool right = j + 1 < v.size() && v[j + 1] > 0.0;
        if (left || right) b.indices.push_back(j);
    }
    return b;
}

double positive_density_median(const DensityField& field) {
    std::vector<double> pos;
    for (double v : field.values)
        if (v > 0.0) pos.push_back(v);
    if (pos.empty()) return 0.0;
    std::nth_element(pos.begin(), pos.begin() + pos.size() / 2, pos.end());
    return pos[pos.size() / 2];
}

LocalTimeEstimate estimate_local_time(const DensityField& field, double lambda0,
                                      double rel_tol, int max_rungs, double density_scale) {
    // The grid resolves the lambda family up to the ceiling 1/(4 dx <X>);
    // beyond it the quanta-truncated left tail makes L^lambda decay. The
    // ladder climbs from 1/64 of that scale to the ceiling and reports the
    // last iterate (or stops early if successive totals agree to rel_tol).
    LocalTimeEstimate est;
    double med = density_scale > 0.0 ? density_scale : positive_density_median(field);
    if (positive_density_median(field) == 0.0) {  // extinct field: zero measure
        est.measure = l_lambda(field, 1.0, lambda0);
        est.converged = true;
        return est;
    }
    const double ceiling = 1.0 / (4.0 * field.dx * med);
    int rungs = std::min(max_rungs, 5);
    double lambda = ceiling / std::pow(2.0, rungs - 1);
    GridMeasure cur = l_lambda(field, lambda, lambda0);
    est.lambdas.push_back(lambda);
    est.totals.push_back(cur.total());
    for (int k = 1; k < rungs; ++k) {
        lambda *= 2.0;
        cur = l_lambda(field, lambda, lambda0);
        est.lambdas.push_back(lambda);
        est.totals.push_back(cur.total());
        if (std::fabs(est.totals[k] - est.totals[k - 1]) <
            rel_tol * std::max(est.totals[k - 1], 1e-300)) {
            est.converged = true;
            break;
        }
    }
    est.measure = std::move(cur);
    return est;
}

EnsembleLocalTime ensemble_local_time(const std::vector<DensityField>& fields,
                                      double lambda0) {
    EnsembleLocalTime out;
    if (fields.empty()) return out;
    double pooled = 0.0;
    long alive = 0;
    for (auto& f : fields) {
        double m = positive_density_median(f);
        if (m > 0.0) {
            pooled += m;
            ++alive;
        }
    }
    if (alive == 0) {
        out.totals.assign(fields.size(), 0.0);
        return out;
    }
    pooled /= double(alive);
    const double ceiling = 1.0 / (4.0 * fields.front().dx * pooled);
    std::size_t best = 0;
    for (int k = -7; k <= 0; ++k) {
        double lam = ceiling * std::pow(2.0, k);
        double acc = 0.0;
        for (auto& f : fields) acc += l_lambda(f, lam, lambda0).total();
        out.lambdas.push_back(lam);
        out.mean_totals.push_back(acc / double(fields.size()));
        if (out.mean_totals.back() > out.mean_totals[best]) best = out.mean_totals.size() - 1;
    }
    out.lambda_star = out.lambdas[best];
    out.totals.reserve(fields.size());
    for (auto& f : fields) out.totals.push_back(l_lambda(f, out.lambda_star, lambda0).total());
    return out;
}

GridMeasure project_to_boundary(const GridMeasure& mu, const DensityField& field) {
    if (mu.weights.size() != field.values.size())
        throw std::invalid_argument("project_to_boundary: grid mismatch");
    BoundarySet b = boundary_set(field);
    GridMeasure out;
    out.x_left = mu.x_left;
    out.dx = mu.dx;
    out.lambda_used = mu.lambda_used;
    out.weights.assign(mu.weights.size(), 0.0);
    if (b.indices.empty()) return out;  // no boundary: mass has nowhere to sit
    for (std::size_t j = 0; j < mu.weights.size(); ++j) {
        double w = mu.weights[j];
        if (w == 0.0) continue;
        auto it = std::lower_bound(b.indices.begin(), b.indices.end(), j);
        std::size_t best;
        if (it == b.indices.end())
            best = b.indices.back();
        else if (it == b.indices.begin())
            best = b.indices.front();
        else
            best = (*it - j <= j - *(it - 1)) ? *it : *(it - 1);
        out.weights[best] += w;
    }
    return out;
}

BoxDimensionFit box_dimension(const BoundarySet& points, std::vector<double> scales) {
    std::sort(scales.begin(), scales.end());
    if (scales.size() < 6)
        throw std::invalid_argument("box_dimension: need at least 6 scales");
    if (scales.back() / scales.front() < 100.0)
        throw std::invalid_argument("box_dimension: scales must span two decades");
    if (scales.front() < 4.0 * points.dx * (1.0 - 1e-9))
        throw std::invalid_argument("box_dimension: smallest scale below 4 dx");

    BoxDimensionFit fit;
    fit.scales = scales;
    fit.reliable = points.indices.size() >= 20;
    for (double eps : scales) {
        long boxes = 0;
        long last = -1;
        double inv = points.dx / eps;  // box index = floor(j * dx / eps)
        for (std::size_t j : points.indices) {
            long bidx = static_cast<long>(std::floor(double(j) * inv));
            if (bidx != last) {
                ++boxes;
                last = bidx;
            }
        }
        fit.counts.push_back(boxes);
    }
    // window: drop two smallest scales and the largest
    fit.fit_lo = 2;
    fit.fit_hi = scales.size() - 1;
    std::vector<double> xs, ys;
    for (std::size_t i = fit.fit_lo; i < fit.fit_hi; ++i) {
        xs.push_back(std::log(1.0 / scales[i]));
        ys.push_back(std::log(std::max<long>(fit.counts[i], 1)));
    }
    auto line = fit_line(xs, ys);
    fit.slope = line.slope;
    fit.stderr_slope = line.stderr_slope;
    return fit;
}

std::string box_dimension_json(const BoxDimensionFit& fit) {
    nlohmann::json j;
    j["scales"] = fit.scales;
    j["counts"] = fit.counts;
    j["slope"] = fit.slope;
    j["stderr"] = fit.stderr_slope;
    j["window"] = {fit.fit_lo, fit.fit_hi};
    j["reliable"] = fit.reliable;
    return j.dump(2);
}

double energy_integral(const GridMeasure& mu, double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("energy_integral: p must lie in (0,1)");
    const auto& w = mu.weights;
    std::size_t lo = 0, hi = w.size();
    while (lo < hi && w[lo] == 0.0) ++lo;
    while (hi > lo && w[hi - 1] == 0.0) --hi;
    if (lo >= hi) return 0.0;
    const double* base = w.data() + lo;
    const std::size_t m = hi - lo;

    // within-cell: uniform-pair expectation E|u-v|^{-p} = dx^{-p} 2/((1-p)(2-p))
    double diag = 0.0;
    for (std::size_t j = 0; j < m; ++j) diag += base[j] * base[j];
    diag *= std::pow(mu.dx, -p) * 2.0 / ((1.0 - p) * (2.0 - p));

    // cross terms via shifted dots: sum_d 2 (d dx)^{-p} sum_j w_j w_{j+d}
    double cross = 0.0;
    const auto& k = simd::kernels();
    for (std::size_t d = 1; d < m; ++d) {
        double r = k.dot(base, base + d, m - d);
        if (r != 0.0) cross += 2.0 * r * std::pow(double(d) * mu.dx, -p);
    }
    return diag + cross;
}

GridMeasure recombine(const ClusterEnsemble& ensemble,
                      const std::vector<GridMeasure>& cluster_measures) {
    if (cluster_measures.size() != ensemble.clusters.size())
        throw std::invalid_argument("recombine: one measure per cluster required");
    const std::size_t n = ensemble.total.values.size();
    for (auto& mu : cluster_measures)
        if (mu.weights.size() != n || mu.dx != ensemble.total.dx ||
            mu.x_left != ensemble.total.x_left)
            throw std::invalid_argument("recombine: measures must share the ensemble grid");

    GridMeasure a, b;
    a.x_left = b.x_left = ensemble.total.x_left;
    a.dx = b.dx = ensemble.total.dx;
    a.weights.assign(n, 0.0);
    b.weights.assign(n, 0.0);

    // form 1: each cluster's measure masked by the zero set of the others
    for (std::size_t i = 0; i < cluster_measures.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double w = cluster_measures[i].weights[j];
            if (w == 0.0) continue;
            double others = ensemble.total.values[j] - ensemble.clusters[i].values[j];
            if (others == 0.0) a.weights[j] += w;
        }
    }
    // form 2: the summed measure masked by the total zero set
    for (std::size_t j = 0; j < n; ++j) {
        if (ensemble.total.values[j] != 0.0) continue;
        double s = 0.0;
        for (auto& mu : cluster_measures) s += mu.weights[j];
        b.weights[j] = s;
    }
    for (std::size_t j = 0; j < n; ++j)
        if (a.weights[j] != b.weights[j])
            throw std::logic_error(
                "recombine: the two mask forms differ; cluster measures must be supported on "
                "their zero sets");
    return a;
}

void write_measure_csv(const GridMeasure& mu, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "x,weight\n";
    os.precision(17);
    for (std::size_t i = 0; i < mu.weights.size(); ++i)
        os << mu.node_x(i) << ',' << mu.weights[i] << '\n';
}

}  // namespace sblt
