#include "sblt/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sblt/simd.hpp"

namespace sblt {

double DensityField::mass() const {
    return simd::kernels().sum(values.data(), values.size()) * dx;
}

bool DensityField::extinct() const {
    for (double v : values)
        if (v != 0.0) return false;
    return true;
}

double InitialMeasure::total_mass() const {
    double m = 0.0;
    for (auto& [x, w] : atoms) m += w;
    return m;
}

double InitialMeasure::support_min() const {
    double v = atoms.front().first;
    for (auto& [x, w] : atoms) v = std::min(v, x);
    return v;
}

double InitialMeasure::support_max() const {
    double v = atoms.front().first;
    for (auto& [x, w] : atoms) v = std::max(v, x);
    return v;
}

namespace {

struct Domain {
    double left = 0.0;
    int n = 0;
};

Domain make_domain(const InitialMeasure& x0, double t, const SpdeConfig& cfg) {
    if (x0.atoms.empty()) throw std::invalid_argument("initial measure has no atoms");
    for (auto& [x, w] : x0.atoms)
        if (w < 0.0) throw std::invalid_argument("initial atom with negative mass");
    Domain d;
    if (cfg.fixed_domain) {
        d.left = cfg.fixed_left;
        d.n = static_cast<int>(std::round((cfg.fixed_right - cfg.fixed_left) / cfg.dx)) + 1;
        return d;
    }
    double reach = 6.0 * std::sqrt(t) + cfg.domain_pad;
    d.left = x0.support_min() - reach;
    d.n = static_cast<int>(std::round((x0.support_max() + reach - d.left) / cfg.dx)) + 1;
    return d;
}

void deposit_atoms(const InitialMeasure& x0, double left, double dx, std::vector<double>& v) {
    for (auto& [x, m] : x0.atoms) {
        double pos = (x - left) / dx;
        auto j = static_cast<long>(std::floor(pos));
        double frac = pos - double(j);
        if (j < 0 || j + 1 >= static_cast<long>(v.size()))
            throw std::invalid_argument("atom outside the simulation domain");
        v[j] += (1.0 - frac) * m / dx;
        v[j + 1] += frac * m / dx;
    }
}

}  // namespace

DensityField simulate_spde(const InitialMeasure& x0, double t, const SpdeConfig& cfg,
                           uint64_t seed) {
    if (!(t > 0.0)) throw std::invalid_argument("simulate_spde: t > 0 required");
    const double dx = cfg.dx;
    double dt = cfg.dt > 0.0 ? cfg.dt : 0.5 * dx * dx;
    if (dt > 0.5 * dx * dx * (1.0 + 1e-12))
        throw std::invalid_argument("simulate_spde: dt must satisfy dt <= dx^2/2");
    const long steps = static_cast<long>(std::ceil(t / dt - 1e-9));
    dt = t / double(steps);

    Domain dom = make_domain(x0, t, cfg);
    const int n = dom.n;
    DensityField out;
    out.x_left = dom.left;
    out.dx = dx;
    out.time = t;
    out.seed = seed;
    out.scheme = "spde-euler";

    std::vector<double> cur(n, 0.0), nxt(n, 0.0), noise(n, 0.0);
    deposit_atoms(x0, dom.left, dx, cur);
    const double target_mass = x0.total_mass();
    if (target_mass == 0.0) {
        out.values = std::move(cur);
        return out;
    }

    // active support window [lo, hi]; each buffer is exactly zero outside
    // its tracked written range
    int lo = 0, hi = n - 1;
    while (lo < n && cur[lo] == 0.0) ++lo;
    while (hi >= 0 && cur[hi] == 0.0) --hi;
    int cur_wa = lo, cur_wb = hi;
    int nxt_wa = 1, nxt_wb = 0;  // empty

    Rng rng(seed);
    const double alpha = dt / (2.0 * dx * dx);
    const double noise_c = dt / dx;
    // Clamp bias of the Gaussian branch scales like e^{-mu/4}: already
    // negligible past mu = 30, so the exact transition is reserved for the
    // genuinely near-zero band.
    const double exact_below = 15.0 * noise_c;  // density with mu = 2 m/dt < 30
    const double two_dx_over_dt = 2.0 * dx / dt;
    const double half_dt_over_dx = 0.5 * dt / dx;
    std::vector<std::pair<int, double>> band;
    const auto& k = simd::kernels();

    for (long s = 0; s < steps && lo <= hi; ++s) {
        // diffusion reaches one node beyond the support; domain edges absorb
        int a = std::max(lo - 1, 1);
        int b = std::min(hi + 1, n - 2);
        // kernel writes global [a,b] from the subarray view starting at a-1
        k.heat_step(nxt.data() + (a - 1), cur.data() + (a - 1), b - a + 3, alpha);
        int len = b - a + 1;
        // Branching noise. Bulk nodes take the Gaussian increment
        // sqrt(X dt/dx) xi (clamped); nodes whose cell mass is within ~25
        // branching quanta of zero instead draw the exact Feller transition
        // m' ~ Gamma(Poisson(2m/dt), dt/2), which kills the clamp bias and
        // produces exact zeros. Either way the cell-mass mean is preserved.
        band.clear();
        for (int j = a; j <= b; ++j)
            if (nxt[j] > 0.0 && nxt[j] < exact_below) band.push_back({j, nxt[j]});
        rng.fill_normal(noise.data(), len);
        k.sqrt_noise_clamp(nxt.data() + a, noise.data(), len, noise_c);
        for (auto& [j, x] : band) {
            long nq = rng.poisson(x * two_dx_over_dt);
            nxt[j] = nq == 0 ? 0.0 : rng.gamma(double(nq)) * half_dt_over_dx;
        }
        // clear stale values of this buffer outside the fresh range
        for (int j = nxt_wa; j <= std::min(nxt_wb, a - 1); ++j) nxt[j] = 0.0;
        for (int j = std::max(nxt_wa, b + 1); j <= nxt_wb; ++j) nxt[j] = 0.0;

        int nlo = a, nhi = b;
        while (nlo <= b && nxt[nlo] == 0.0) ++nlo;
        while (nhi >= a && nxt[nhi] == 0.0) --nhi;
        cur.swap(nxt);
        nxt_wa = cur_wa;
        nxt_wb = cur_wb;
        cur_wa = a;
        cur_wb = b;
        lo = nlo;
        hi = nhi;

        if ((s & 63) == 0 && lo <= hi) {
            double mass = k.sum(cur.data() + lo, hi - lo + 1) * dx;
            if (!std::isfinite(mass) || mass > cfg.mass_guard * target_mass) {
                std::ostringstream os;
                os << "simulate_spde: mass guard tripped at step " << s << " t="
                   << dt * double(s) << " mass=" << mass;
                throw std::runtime_error(os.str());
            }
        }
    }

    out.values = std::move(cur);
    return out;
}

DensityField simulate_brw(const InitialMeasure& x0, double t, long particles_per_mass,
                          const SpdeConfig& cfg, uint64_t seed) {
    if (!(t > 0.0)) throw std::invalid_argument("simulate_brw: t > 0 required");
    const double total = x0.total_mass();
    long n0 = std::lround(double(particles_per_mass) * total);
    if (n0 < 1) throw std::invalid_argument("simulate_brw: need particles_per_mass * mass >= 1");
    const double mass_per = total / double(n0);
    const long gens = std::max<long>(1, std::lround(t * double(particles_per_mass)));
    const double sd = std::sqrt(t / double(gens));

    Domain dom = make_domain(x0, t, cfg);
    Rng rng(seed);

    std::vector<double> pos;
    pos.reserve(2 * n0);
    {
        // particles allocated to atoms proportionally (largest remainder)
        std::vector<long> counts(x0.atoms.size(), 0);
        long assigned = 0;
        for (std::size_t i = 0; i < x0.atoms.size(); ++i) {
            counts[i] = static_cast<long>(std::floor(x0.atoms[i].second / total * double(n0)));
            assigned += counts[i];
        }
        std::size_t i = 0;
        while (assigned < n0) {
            counts[i % counts.size()]++;
            ++assigned;
            ++i;
        }
        for (std::size_t a = 0; a < counts.size(); ++a)
            for (long c = 0; c < counts[a]; ++c) pos.push_back(x0.atoms[a].first);
    }

    std::vector<double> next;
    next.reserve(pos.capacity());
    uint64_t bits = 0;
    int bits_left = 0;
    const long cap = static_cast<long>(cfg.mass_guard) * n0;
    for (long g = 0; g < gens && !pos.empty(); ++g) {
        next.clear();
        for (double p : pos) {
            double moved = p + sd * rng.normal();
            if (bits_left == 0) {
                bits = rng.next_u64();
                bits_left = 64;
            }
            bool split = bits & 1;
            bits >>= 1;
            --bits_left;
            if (split) {
                next.push_back(moved);
                next.push_back(moved);
            }
        }
        pos.swap(next);
        if (static_cast<long>(pos.size()) > cap)
            throw std::runtime_error("simulate_brw: particle count guard tripped");
    }

    DensityField out;
    out.x_left = dom.left;
    out.dx = cfg.dx;
    out.time = t;
    out.seed = seed;
    out.scheme = "brw";
    out.values.assign(dom.n, 0.0);
    for (double p : pos) {
        long j = std::lround((p - dom.left) / cfg.dx);
        if (j >= 0 && j < dom.n) out.values[j] += mass_per / cfg.dx;
    }
    return out;
}

double ClusterEnsemble::acceptance_rate() const {
    return attempts > 0 ? double(n_clusters) / double(attempts) : 0.0;
}

ClusterEnsemble sample_cluster_decomposition(const InitialMeasure& x0, double t, double m0,
                                             const SpdeConfig& cfg, uint64_t seed) {
    if (!(t > 0.0)) throw std::invalid_argument("clusters: t > 0 required");
    if (!(m0 > 0.0) || m0 > 0.05 * t)
        throw std::invalid_argument("clusters: need 0 < m0 <= 0.05 t (bias control)");

    // all clusters share one grid so they superpose node-by-node
    SpdeConfig shared = cfg;
    if (!shared.fixed_domain) {
        double reach = 6.0 * std::sqrt(t) + cfg.domain_pad;
        shared.fixed_domain = true;
        shared.fixed_left = x0.support_min() - reach;
        shared.fixed_right = x0.support_max() + reach;
    }
    // guard against runaway mass on the cluster scale (t/2), not on m0
    shared.mass_guard = cfg.mass_guard * std::max(1.0, t / m0);

    ClusterEnsemble ens;
    ens.m0 = m0;
    Rng rng(derive_seed(seed, 0x636c7573));
    const double total = x0.total_mass();
    ens.n_clusters = rng.poisson(2.0 * total / t);

    ens.total.x_left = shared.fixed_left;
    ens.total.dx = shared.dx;
    ens.total.time = t;
    ens.total.seed = seed;
    ens.total.scheme = "cluster-sum";
    ens.total.values.assign(
        static_cast<std::size_t>(std::round((shared.fixed_right - shared.fixed_left) / shared.dx)) + 1,
        0.0);

    for (long i = 0; i < ens.n_clusters; ++i) {
        double u = rng.uniform() * total;
        double xi = x0.atoms.back().first;
        for (auto& [x, m] : x0.atoms) {
            if (u < m) {
                xi = x;
                break;
            }
            u -= m;
        }
        bool accepted = false;
        for (long attempt = 0; attempt < 200000; ++attempt) {
            ++ens.attempts;
            uint64_t s = derive_seed(seed, (uint64_t(i + 1) << 24) ^ uint64_t(attempt));
            DensityField f = simulate_spde(InitialMeasure::point(xi, m0), t, shared, s);
            if (!f.extinct()) {
                accepted = true;
                ens.seeds_x.push_back(xi);
                for (std::size_t j = 0; j < f.values.size(); ++j)
                    ens.total.values[j] += f.values[j];
                ens.clusters.push_back(std::move(f));
                break;
            }
        }
        if (!accepted)
            throw std::runtime_error(
                "clusters: acceptance below 1e-4; m0 too small for the grid resolution");
    }
    return ens;
}

void write_field_csv(const DensityField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "x,value\n";
    os.precision(17);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        os << f.node_x(i) << ',' << f.values[i] << '\n';
}

void write_field_binary(const DensityField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    uint64_t n = f.values.size();
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(reinterpret_cast<const char*>(&f.dx), 8);
    os.write(reinterpret_cast<const char*>(&f.time), 8);
    os.write(reinterpret_cast<const char*>(&f.seed), 8);
    os.write(reinterpret_cast<const char*>(f.values.data()), 8 * std::streamsize(n));
}

DensityField read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    DensityField f;
    uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), 8);
    is.read(reinterpret_cast<char*>(&f.dx), 8);
    is.read(reinterpret_cast<char*>(&f.time), 8);
    is.read(reinterpret_cast<char*>(&f.seed), 8);
    f.values.resize(n);
    is.read(reinterpret_cast<char*>(f.values.data()), 8 * std::streamsize(n));
    if (!is) throw std::runtime_error("truncated field file " + path);
    f.scheme = "binary";
    return f;
}

}  // namespace sblt
