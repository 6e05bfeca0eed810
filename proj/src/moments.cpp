#include "sblt/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sblt/rng.hpp"
#include "sblt/simd.hpp"

namespace sblt {

namespace {

constexpr double kChainDt = 0.0625;

double gaussian_density(double t, double x) {
    return std::exp(-0.5 * x * x / t) / std::sqrt(2.0 * M_PI * t);
}

// Gauss-Legendre 6-point rule on [-1, 1].
constexpr double kGL6x[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                             0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr double kGL6w[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                             0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

}  // namespace

double ConstantsBundle::rho(double z1, double z2) const {
    if (rho_nodes.empty()) return 1.0;
    const double lo = rho_nodes.front(), hi = rho_nodes.back();
    if (std::fabs(z1 - z2) > hi - lo) return 1.0;  // far separation
    auto clampi = [&](double z) {
        double pos = (z - lo) / (rho_nodes[1] - rho_nodes[0]);
        return std::clamp(static_cast<long>(std::lround(pos)), 0L,
                          static_cast<long>(rho_nodes.size()) - 1);
    };
    long i = clampi(z1), j = clampi(z2);
    return rho_values[static_cast<std::size_t>(i) * rho_nodes.size() + j];
}

EstimateCResult estimate_c(const ProfileF& profile, const SpectralModel& model,
                           const VFamily& family, long n_paths, uint64_t seed) {
    if (n_paths < 10000) throw std::invalid_argument("estimate_c: n_paths >= 1e4 required");
    ZFactor zf(family, profile, model.lambda0());
    ImmortalChain chain(model, kChainDt);
    const int zsteps = static_cast<int>(zf.horizon() / kChainDt) - 1;

    // time grid: square-graded on [0, 0.01] (resolves the u^{-1/2} spike of
    // V^1_u(B_u) near 0), uniform du = 2.5e-4 afterwards
    std::vector<double> grid;
    const int graded = 40;
    for (int j = 0; j <= graded; ++j) {
        double r = double(j) / graded;
        grid.push_back(0.01 * r * r);
    }
    for (double u = 0.01 + 2.5e-4; u < 1.0 + 1e-12; u += 2.5e-4) grid.push_back(u);
    if (grid.back() < 1.0) grid.push_back(1.0);

    auto v1 = [&](double u, double x) {
        if (u < 1e-4) return gaussian_density(u, x);  // linear regime below t0
        return family.v(1.0, u, x);
    };

    const int inner = 4;
    double acc = 0.0, acc2 = 0.0, zmax = 0.0;
    Rng rng(seed);
    for (long pth = 0; pth < n_paths; ++pth) {
        double b = 0.0, integ = 0.0;
        double prev = 0.0;  // integrand at u=0 is p_0(0) -> handled by grading
        for (std::size_t k = 1; k < grid.size(); ++k) {
            double du = grid[k] - grid[k - 1];
            b += std::sqrt(du) * rng.normal();
            double cur = v1(grid[k], b);
            integ += 0.5 * du * (prev + cur);
            prev = cur;
        }
        double x1 = std::clamp(b, -model.domain_bound + 0.5, model.domain_bound - 0.5);
        double zsum = 0.0;
        for (int i = 0; i < inner; ++i) {
            auto path = chain.sample_path(x1, zsteps, rng);
            double tail = 0.0;
            double z = zf.z_horizon(path, kChainDt, &tail);
            zmax = std::max(zmax, z * std::exp(tail));
            zsum += z;
        }
        double val = std::exp(-integ) * (zsum / inner) * model.psi0(x1);
        acc += val;
        acc2 += val * val;
    }
    EstimateCResult r;
    r.value = acc / double(n_paths);
    r.stderr_mean = std::sqrt((acc2 / n_paths - r.value * r.value) / double(n_paths));
    r.cz_empirical = zmax;
    // analytic cap: integrate the sup-x integrand plus the rate-bound tail
    double cap = 0.0;
    for (double s = 0.0; s < zf.horizon(); s += 0.05) {
        double sup = 0.0;
        for (double x = -6.0; x <= 6.0; x += 0.1) sup = std::max(sup, zf.integrand(s, x));
        cap += 0.05 * sup;
    }
    cap += zf.tail_envelope() / zf.rate() * std::exp(-zf.rate() * zf.horizon());
    r.cz_bound = std::exp(cap);
    return r;
}

double rho_estimate(double z1, double z2, const SpectralModel& model, const F2Table& f2,
                    long n_paths, uint64_t seed) {
    if (std::fabs(z1) > model.domain_bound || std::fabs(z2) > model.domain_bound)
        throw std::invalid_argument("rho: points outside the resolved domain");
    if (z1 == z2) return 1.0;  // W_inf(Y, Y_0) = 1
    WFactor wf(f2);
    ImmortalChain chain(model, kChainDt);
    // horizon: the second argument escapes once e^{u/2}|z1-z2| clears the
    // profile support plus the path range
    double sep = std::fabs(z1 - z2);
    int steps = static_cast<int>(std::ceil(2.0 * std::log(30.0 / std::min(sep, 30.0)) / kChainDt)) + 32;
    Rng rng(seed);
    double f12 = 0.0, f21 = 0.0;
    for (long p = 0; p < n_paths; ++p) {
        f12 += wf.w_infinity(chain.sample_path(z1, steps, rng), kChainDt, z2);
        f21 += wf.w_infinity(chain.sample_path(z2, steps, rng), kChainDt, z1);
    }
    return (f12 / n_paths) * (f21 / n_paths);
}

ConstantsBundle build_constants(const ProfileF& profile, const SpectralModel& model,
                                const VFamily& family, const F2Table& f2, long n_paths,
                                uint64_t seed) {
    ConstantsBundle b;
    b.theta = model.theta;
    b.lambda0 = model.lambda0();
    b.seed = seed;
    b.n_paths = n_paths;
    auto c = estimate_c(profile, model, family, n_paths, seed);
    b.C = c.value;
    b.C_stderr = c.stderr_mean;
    b.cz_empirical = c.cz_empirical;
    b.cz_bound = c.cz_bound;

    for (double z = -4.5; z <= 4.5 + 1e-9; z += 0.375) b.rho_nodes.push_back(z);
    const std::size_t n = b.rho_nodes.size();
    b.rho_values.assign(n * n, 1.0);
    long per_pair = std::max<long>(300, n_paths / 40);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double r = rho_estimate(b.rho_nodes[i], b.rho_nodes[j], model, f2, per_pair,
                                    derive_seed(seed, 7000 + i * n + j));
            b.rho_values[i * n + j] = r;
            b.rho_values[j * n + i] = r;
        }
    return b;
}

std::string constants_to_json(const ConstantsBundle& b) {
    nlohmann::json j;
    j["C"] = b.C;
    j["C_stderr"] = b.C_stderr;
    j["theta"] = b.theta;
    j["lambda0"] = b.lambda0;
    j["rho_nodes"] = b.rho_nodes;
    j["rho_values"] = b.rho_values;
    j["cz_empirical"] = b.cz_empirical;
    j["cz_bound"] = b.cz_bound;
    j["seed"] = b.seed;
    j["n_paths"] = b.n_paths;
    return j.dump(2);
}

ConstantsBundle constants_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ConstantsBundle b;
    b.C = j.at("C");
    b.C_stderr = j.at("C_stderr");
    b.theta = j.at("theta");
    b.lambda0 = j.at("lambda0");
    b.rho_nodes = j.at("rho_nodes").get<std::vector<double>>();
    b.rho_values = j.at("rho_values").get<std::vector<double>>();
    b.cz_empirical = j.at("cz_empirical");
    b.cz_bound = j.at("cz_bound");
    b.seed = j.at("seed");
    b.n_paths = j.at("n_paths");
    return b;
}

std::string moment_report_jsonl(const std::vector<MomentReport>& reports) {
    std::ostringstream os;
    for (auto& r : reports) {
        nlohmann::json j;
        j["name"] = r.name;
        j["formula_value"] = r.formula_value;
        j["mc_estimate"] = r.mc_estimate;
        j["mc_stderr"] = r.mc_stderr;
        j["replicates"] = r.replicates;
        j["z_score"] = r.z_score;
        os << j.dump() << '\n';
    }
    return os.str();
}

double canonical_first_moment(const std::function<double(double)>& phi, double t,
                              const ConstantsBundle& bundle, const SpectralModel& model) {
    if (!(t > 0.0)) throw std::invalid_argument("canonical_first_moment: t > 0");
    double acc = 0.0;
    double rt = std::sqrt(t);
    for (int q = 0; q < model.quad.order; ++q) {
        double z = model.quad.nodes[q];
        if (std::fabs(z) > model.domain_bound) continue;
        acc += model.quad.weights[q] * phi(rt * z) * model.psi0(z);
    }
    return bundle.C * std::pow(t, -bundle.lambda0) * acc;
}

double px_first_moment(const std::function<double(double)>& phi, double t,
                       const InitialMeasure& x0, const ProfileF& profile,
                       const ConstantsBundle& bundle, const SpectralModel& model) {
    if (!(t > 0.0)) throw std::invalid_argument("px_first_moment: t > 0");
    double rt = std::sqrt(t);
    double outer = 0.0;
    for (auto& [xa, ma] : x0.atoms) {
        double zacc = 0.0;
        for (int q = 0; q < model.quad.order; ++q) {
            double z = model.quad.nodes[q];
            if (std::fabs(z) > model.domain_bound) continue;
            double crowd = 0.0;
            for (auto& [yb, mb] : x0.atoms) crowd += mb * profile(z + (xa - yb) / rt);
            zacc += model.quad.weights[q] * phi(xa + rt * z) * std::exp(-crowd / t) *
                    model.psi0(z);
        }
        outer += ma * zacc;
    }
    return bundle.C * std::pow(t, -bundle.lambda0) * outer;
}

double second_moment_mass_bound(double t, const ConstantsBundle& bundle) {
    return bundle.C * bundle.C * bundle.theta * bundle.theta / (1.0 - bundle.lambda0) *
           std::pow(t, 1.0 - 2.0 * bundle.lambda0);
}

PairKernel PairKernel::mass() {
    PairKernel k;
    k.full = [](double, double) { return 1.0; };
    k.separation_only = [](double) { return 1.0; };
    k.small_sep_exponent = 0.0;
    return k;
}

PairKernel PairKernel::riesz(double p) {
    PairKernel k;
    k.full = [p](double x, double y) { return std::pow(std::fabs(x - y), -p); };
    k.separation_only = [p](double e) { return std::pow(std::fabs(e), -p); };
    k.small_sep_exponent = 0.5 * p;
    return k;
}

namespace {

// Quadrature state shared by the second-moment evaluators.
struct SpectralQuad {
    std::vector<int> idx;          // usable node indices
    std::vector<double> z, w, p0;  // node, weight, psi0(node)
    std::vector<double> psis;      // [k*nb+n]
    const SpectralModel* model;

    explicit SpectralQuad(const SpectralModel& m) : model(&m) {
        const int nb = m.basis_size;
        std::vector<double> buf(nb);
        for (int q = 0; q < m.quad.order; ++q) {
            if (std::fabs(m.quad.nodes[q]) > m.domain_bound) continue;
            idx.push_back(q);
            z.push_back(m.quad.nodes[q]);
            w.push_back(m.quad.weights[q]);
            m.psi_values(m.quad.nodes[q], buf.data());
            p0.push_back(buf[0]);
            psis.insert(psis.end(), buf.begin(), buf.end());
        }
    }
    std::size_t size() const { return z.size(); }
};

// G(tau) = iint q_tau(z1,y) h(sqrt(t) y, sqrt(t) y + sqrt(w)(z2-z1))
//          psi0(z1) psi0(z2) dm(z1) dm(z2) dm(y),  w = t e^{-tau}.
double g_of_tau(const SpectralQuad& sq, const PairKernel& h, double t, double tau) {
    const SpectralModel& m = *sq.model;
    const int nb = m.basis_size;
    const std::size_t n = sq.size();
    std::vector<double> decay(nb);
    for (int j = 0; j < nb; ++j) decay[j] = std::exp(-m.eigenvalues[j] * tau);
    const double rw = std::sqrt(t * std::exp(-tau));
    const double rt = std::sqrt(t);
    const auto& kern = simd::kernels();

    if (h.separation_only) {
        // h independent of the y argument: the y-sum is the survival factor
        std::vector<double> surv(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const double* pi = &sq.psis[i * nb];
            for (int nn = 0; nn < nb; ++nn)
                s += decay[nn] * m.eigvec_rows[static_cast<std::size_t>(0) * nb + nn] * pi[nn];
            surv[i] = s;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double base = sq.w[i] * sq.p0[i] * surv[i];
            for (std::size_t j = 0; j < n; ++j) {
                double e = rw * (sq.z[j] - sq.z[i]);
                double hv = (i == j && h.small_sep_exponent > 0.0)
                                ? 0.0  // same-node pair: handled by the diagonal convention
                                : h.separation_only(e);
                acc += base * sq.w[j] * sq.p0[j] * hv;
            }
        }
        return acc;
    }

    // general kernel: precompute the q matrix, then the triple sum
    std::vector<double> qm(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i; k < n; ++k) {
            double v = kern.dot3(&sq.psis[i * nb], &sq.psis[k * nb], decay.data(), nb);
            qm[i * n + k] = v;
            qm[k * n + i] = v;
        }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            double qik = qm[i * n + k] * sq.w[i] * sq.p0[i] * sq.w[k];
            if (qik == 0.0) continue;
            double y = rt * sq.z[k];
            double inner = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                inner += sq.w[j] * sq.p0[j] * h.full(y, y + rw * (sq.z[j] - sq.z[i]));
            acc += qik * inner;
        }
    }
    return acc;
}

}  // namespace

double second_moment_bound(const PairKernel& h, double t, const SpectralModel& model,
                           const ConstantsBundle& bundle, SecondMomentOptions opts) {
    if (!(t > 0.0)) throw std::invalid_argument("second_moment_bound: t > 0");
    const double zeta = h.small_sep_exponent;
    if (bundle.lambda0 - 1.0 + zeta >= 0.0)
        throw std::invalid_argument("second_moment_bound: kernel exponent not integrable");
    SpectralQuad sq(model);

    // int_0^t w^{-2 l0} G dw = t^{1-2 l0} int_0^inf e^{(2 l0 - 1) tau} G(tau) dtau
    const double l0 = bundle.lambda0;
    double total = 0.0;
    const double panel_w = opts.tail_start / opts.panels;
    for (int pnl = 0; pnl < opts.panels; ++pnl) {
        double a = pnl * panel_w;
        for (int q = 0; q < opts.nodes_per_panel; ++q) {
            double tau = a + 0.5 * panel_w * (1.0 + kGL6x[q]);
            double wgt = 0.5 * panel_w * kGL6w[q];
            total += wgt * std::exp((2.0 * l0 - 1.0) * tau) * g_of_tau(sq, h, t, tau);
        }
    }
    // psi0-mode tail: G(tau) ~ G(T0) e^{-(l0 - zeta)(tau - T0)} beyond T0
    double T0 = opts.tail_start;
    double gT0 = g_of_tau(sq, h, t, T0);
    total += gT0 * std::exp((2.0 * l0 - 1.0) * T0) / (1.0 - l0 - zeta);
    return bundle.C * bundle.C * std::pow(t, 1.0 - 2.0 * l0) * total;
}

double second_moment_bound_integrand(const PairKernel& h, double t, double w,
                                     const SpectralModel& model,
                                     const ConstantsBundle& bundle) {
    if (!(w > 0.0) || !(w < t)) throw std::invalid_argument("integrand: 0 < w < t");
    SpectralQuad sq(model);
    double tau = std::log(t / w);
    return bundle.C * bundle.C * std::pow(w, -2.0 * bundle.lambda0) *
           g_of_tau(sq, h, t, tau);
}

ExactSecondMomentResult exact_second_moment(const PairKernel& h, double t,
                                            const SpectralModel& model,
                                            const ConstantsBundle& bundle, const F2Table& f2,
                                            long n_paths, uint64_t seed) {
    if (n_paths < 10000) throw std::invalid_argument("exact_second_moment: n_paths >= 1e4");
    const double l0 = bundle.lambda0;
    // reduced Hermite grid for the (z1, z2) quadrature
    auto zq = gauss_hermite(16);
    std::vector<double> p0(zq.order);
    for (int i = 0; i < zq.order; ++i) p0[i] = model.psi0(zq.nodes[i]);

    // tau-panels for s = t(1 - e^{-tau}); the survival factor kills the
    // integrand superexponentially, so a short range suffices
    struct Node {
        double tau, weight;
    };
    constexpr double kGL4x[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    constexpr double kGL4w[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    std::vector<Node> nodes;
    const int panels = 4;
    const double span = 8.0;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double a = pnl * span / panels;
        for (int q = 0; q < 4; ++q)
            nodes.push_back({a + 0.5 * (span / panels) * (1.0 + kGL4x[q]),
                             0.5 * (span / panels) * kGL4w[q]});
    }

    const int usteps = 24;
    Rng rng(seed);
    double acc = 0.0, acc2 = 0.0;
    std::vector<double> bpath(usteps + 1), dshift(usteps + 1), inv_rtu(usteps + 1),
        inv_tu(usteps + 1);
    for (long pth = 0; pth < n_paths; ++pth) {
        double path_val = 0.0;
        // one standard Brownian path on [0,1], rescaled per s
        bpath[0] = 0.0;
        for (int k = 1; k <= usteps; ++k)
            bpath[k] = bpath[k - 1] + std::sqrt(1.0 / usteps) * rng.normal();
        for (auto& nd : nodes) {
            double s = t * (1.0 - std::exp(-nd.tau));
            double rs = std::sqrt(s);
            double rts = std::sqrt(t - s);
            double bs = rs * bpath[usteps];
            for (int k = 0; k <= usteps; ++k) {
                double u = s * double(k) / usteps;
                dshift[k] = bs - rs * bpath[k];  // B_s - B_u
                inv_tu[k] = 1.0 / (t - u);
                inv_rtu[k] = std::sqrt(inv_tu[k]);
            }
            //   int_0^s V^{inf,inf}_{t-u}(rts z1 + Bs - Bu, rts z2 + Bs - Bu) du
            // accumulated per (z1, z2) pair on the reduced grid
            double pair_acc = 0.0;
            const double du = s / usteps;
            for (int i = 0; i < zq.order; ++i) {
                double a1 = rts * zq.nodes[i];
                for (int j = 0; j < zq.order; ++j) {
                    double a2 = rts * zq.nodes[j];
                    double integ = 0.0;
                    for (int k = 0; k <= usteps; ++k) {
                        double v = f2((a1 + dshift[k]) * inv_rtu[k],
                                      (a2 + dshift[k]) * inv_rtu[k]) *
                                   inv_tu[k];
                        integ += (k == 0 || k == usteps) ? 0.5 * v : v;
                    }
                    pair_acc += zq.weights[i] * zq.weights[j] * p0[i] * p0[j] *
                                bundle.rho(zq.nodes[i], zq.nodes[j]) *
                                std::exp(-integ * du) * h.full(a1 + bs, a2 + bs);
                }
            }
            // ds = t e^{-tau} dtau and (t-s)^{-2 l0} = t^{-2 l0} e^{2 l0 tau}
            path_val += nd.weight * t * std::exp((2.0 * l0 - 1.0) * nd.tau) *
                        std::pow(t, -2.0 * l0) * pair_acc;
        }
        acc += path_val;
        acc2 += path_val * path_val;
    }
    ExactSecondMomentResult r;
    double mean = acc / double(n_paths);
    r.value = bundle.C * bundle.C * mean;
    r.stderr_mean =
        bundle.C * bundle.C * std::sqrt((acc2 / n_paths - mean * mean) / double(n_paths));
    return r;
}

double px_second_moment_bound(double t, const InitialMeasure& x0,
                              const ConstantsBundle& bundle) {
    double m = x0.total_mass();
    double c2t2 = bundle.C * bundle.C * bundle.theta * bundle.theta;
    return m * c2t2 / (1.0 - bundle.lambda0) * std::pow(t, 1.0 - 2.0 * bundle.lambda0) +
           m * m * c2t2 * std::pow(t, -2.0 * bundle.lambda0);
}

}  // namespace sblt
