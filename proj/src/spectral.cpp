#include "sblt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sblt/simd.hpp"

namespace sblt {

KillingFunction zero_killing() {
    return {[](double) { return 0.0; }, 0.0, 0.0};
}

KillingFunction constant_killing(double c) {
    return {[c](double) { return c; }, c, c};
}

KillingFunction scaled_profile_killing(const ProfileF& f, double scale) {
    ProfileF copy = f;
    return {[copy, scale](double x) { return scale * copy(x); }, 0.0, 0.0};
}

void validate_killing(const KillingFunction& kill, double limit_tol) {
    for (double x = -16.0; x <= 16.0; x += 0.25)
        if (kill.rate(x) < 0.0)
            throw std::invalid_argument("killing function negative at x=" + std::to_string(x));
    for (double ax : {8.0, 12.0, 16.0}) {
        if (std::fabs(kill.rate(ax) - kill.limit_pos) > limit_tol ||
            std::fabs(kill.rate(-ax) - kill.limit_neg) > limit_tol)
            throw std::invalid_argument("killing function limits not attained near |x|=" +
                                        std::to_string(ax));
    }
}

namespace {

void finalize_model(SpectralModel& m) {
    const int nb = m.basis_size;
    m.domain_bound = std::sqrt(2.0 * nb);
    m.eigvec_cols.assign(m.eigvec_rows.size(), 0.0);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            m.eigvec_cols[static_cast<std::size_t>(j) * nb + i] =
                m.eigvec_rows[static_cast<std::size_t>(i) * nb + j];

    // Sign convention: psi_0(0) > 0; other modes get their largest
    // coefficient positive so serialization round-trips exactly.
    std::vector<double> h(nb);
    hermite_values(nb, 0.0, h.data());
    for (int j = 0; j < nb; ++j) {
        double* col = &m.eigvec_cols[static_cast<std::size_t>(j) * nb];
        double ref;
        if (j == 0) {
            ref = simd::kernels().dot(col, h.data(), nb);
        } else {
            ref = col[0];
            for (int i = 1; i < nb; ++i)
                if (std::fabs(col[i]) > std::fabs(ref)) ref = col[i];
        }
        if (ref < 0.0)
            for (int i = 0; i < nb; ++i) {
                col[i] = -col[i];
                m.eigvec_rows[static_cast<std::size_t>(i) * nb + j] = col[i];
            }
    }
    m.theta = m.eigvec_cols[0];  // 0th Hermite coefficient of psi_0
}

}  // namespace

void SpectralModel::psi_values(double x, double* out) const {
    const int nb = basis_size;
    std::vector<double> h(nb);
    hermite_values(nb, x, h.data());
    for (int j = 0; j < nb; ++j)
        out[j] = simd::kernels().dot(&eigvec_cols[static_cast<std::size_t>(j) * nb],
                                     h.data(), nb);
}

double SpectralModel::psi0(double x) const {
    const int nb = basis_size;
    std::vector<double> h(nb);
    hermite_values(nb, x, h.data());
    return simd::kernels().dot(eigvec_cols.data(), h.data(), nb);
}

double SpectralModel::killing_at(double x) const {
    const int nb = basis_size;
    std::vector<double> p(nb);
    psi_values(x, p.data());
    double s = 0.0;
    for (int n = 0; n < nb; ++n)
        s += eigenvalues[n] * eigvec_rows[static_cast<std::size_t>(0) * nb + n] * p[n];
    return s;
}

SpectralModel build_generator(const KillingFunction& kill, int basis_size,
                              int quadrature_order) {
    if (basis_size < 4) throw std::invalid_argument("build_generator: basis_size >= 4");
    if (quadrature_order < 2 * basis_size)
        throw std::invalid_argument("build_generator: quadrature_order >= 2*basis_size");
    validate_killing(kill);

    const int nb = basis_size;
    SpectralModel m;
    m.basis_size = nb;
    m.quadrature_order = quadrature_order;
    m.quad = gauss_hermite(quadrature_order);

    const int nq = m.quad.order;
    std::vector<double> phi(nq);
    for (int q = 0; q < nq; ++q) {
        phi[q] = kill.rate(m.quad.nodes[q]);
        if (!std::isfinite(phi[q]))
            throw std::invalid_argument("build_generator: killing function not finite at x=" +
                                        std::to_string(m.quad.nodes[q]));
    }

    // G = diag(n/2) + K with K_ij = int phi h_i h_j dm by quadrature.
    std::vector<double> hv(static_cast<std::size_t>(nq) * nb);
    for (int q = 0; q < nq; ++q) hermite_values(nb, m.quad.nodes[q], &hv[static_cast<std::size_t>(q) * nb]);

    std::vector<double> gmat(static_cast<std::size_t>(nb) * nb, 0.0);
    for (int q = 0; q < nq; ++q) {
        double wphi = m.quad.weights[q] * phi[q];
        if (wphi == 0.0) continue;
        const double* hq = &hv[static_cast<std::size_t>(q) * nb];
        for (int i = 0; i < nb; ++i) {
            double s = wphi * hq[i];
            double* row = &gmat[static_cast<std::size_t>(i) * nb];
            for (int j = i; j < nb; ++j) row[j] += s * hq[j];
        }
    }
    for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < i; ++j)
            gmat[static_cast<std::size_t>(i) * nb + j] = gmat[static_cast<std::size_t>(j) * nb + i];
        gmat[static_cast<std::size_t>(i) * nb + i] += 0.5 * i;
    }

    sym_eig(gmat, nb, m.eigenvalues, m.eigvec_rows);

    // Orthonormality is the solver's health check; report conditioning if off.
    for (int a = 0; a < nb; ++a)
        for (int b = a; b < nb; ++b) {
            double g = 0.0;
            for (int i = 0; i < nb; ++i)
                g += m.eigvec_rows[static_cast<std::size_t>(i) * nb + a] *
                     m.eigvec_rows[static_cast<std::size_t>(i) * nb + b];
            if (std::fabs(g - (a == b ? 1.0 : 0.0)) > 1e-9) {
                std::ostringstream os;
                os << "build_generator: eigenvector gram defect " << g << " at (" << a << ','
                   << b << "); matrix scale " << gmat[0] << ".." << 0.5 * (nb - 1);
                throw std::runtime_error(os.str());
            }
        }

    finalize_model(m);
    return m;
}

namespace {

void check_domain(const SpectralModel& m, double x, const char* who) {
    if (std::fabs(x) > m.domain_bound)
        throw std::invalid_argument(std::string(who) + ": point outside resolved domain |x| <= " +
                                    std::to_string(m.domain_bound));
}

}  // namespace

DensityResult transition_density_ex(const SpectralModel& m, double t, double x, double y) {
    if (t < kMinExpansionTime)
        throw std::invalid_argument("transition_density: t below expansion cutoff 0.05");
    check_domain(m, x, "transition_density");
    check_domain(m, y, "transition_density");
    const int nb = m.basis_size;
    std::vector<double> px(nb), py(nb), decay(nb);
    m.psi_values(x, px.data());
    m.psi_values(y, py.data());
    for (int j = 0; j < nb; ++j) decay[j] = std::exp(-m.eigenvalues[j] * t);
    DensityResult r;
    // (psi_x * psi_y) * decay keeps q_t(x,y) = q_t(y,x) bitwise.
    r.value = simd::kernels().dot3(px.data(), py.data(), decay.data(), nb);
    // Tail estimate from the last retained mode; with phi >= 0 the killed
    // rates satisfy lambda_n >= n/2, giving the geometric-style factor.
    double last = std::fabs(decay[nb - 1] * px[nb - 1] * py[nb - 1]);
    r.tail_estimate = last / std::max(1e-300, 1.0 - std::exp(-0.5 * t));
    r.flagged = r.tail_estimate > 1e-8 * std::max(1.0, std::fabs(r.value));
    return r;
}

double transition_density(const SpectralModel& m, double t, double x, double y) {
    return transition_density_ex(m, t, x, y).value;
}

double survival_probability(const SpectralModel& m, double x, double t) {
    if (t < 0.0) throw std::invalid_argument("survival_probability: t >= 0 required");
    check_domain(m, x, "survival_probability");
    if (t == 0.0) return 1.0;
    const int nb = m.basis_size;
    std::vector<double> px(nb);
    m.psi_values(x, px.data());
    double s = 0.0;
    for (int j = 0; j < nb; ++j)
        s += std::exp(-m.eigenvalues[j] * t) * m.eigvec_rows[static_cast<std::size_t>(0) * nb + j] * px[j];
    return s;
}

double immortal_transition_density(const SpectralModel& m, double t, double x, double y) {
    double p0x = m.psi0(x);
    if (!(p0x > 0.0))
        throw std::invalid_argument("immortal_transition_density: psi0(x) must be positive");
    double p0y = m.psi0(y);
    return transition_density(m, t, x, y) * (p0y / p0x) * std::exp(m.eigenvalues[0] * t);
}

namespace {

// Smallest t at which the truncated expansion's tail estimate clears 1e-7.
double resolved_time(const SpectralModel& m) {
    double lam = m.eigenvalues[m.basis_size - 1];
    double t = kMinExpansionTime;
    while (t < 8.0 && std::exp(-lam * t) > 1e-7 * (1.0 - std::exp(-0.5 * t))) t *= 1.25;
    return t;
}

// Un-killed OU transition density with respect to Lebesgue measure.
double ou_kernel(double t, double x, double y) {
    double v = 1.0 - std::exp(-t);
    double mdiff = y - std::exp(-0.5 * t) * x;
    return std::exp(-0.5 * mdiff * mdiff / v) / std::sqrt(2.0 * M_PI * v);
}

}  // namespace

ImmortalChain::ImmortalChain(const SpectralModel& m, double dt) : model_(&m), dt_(dt) {
    if (dt < kMinExpansionTime)
        throw std::invalid_argument("ImmortalChain: dt below expansion cutoff 0.05");
    nodes_ = m.quad.nodes;
    const int n = static_cast<int>(nodes_.size());
    const int nb = m.basis_size;
    // The eigenexpansion of q_dt only converges once e^{-lambda_nb dt} is
    // negligible. Below that horizon use the small-dt kernel instead:
    // q_dt(x,y) ~ k^{OU}_dt(x,y) e^{-dt (phi(x)+phi(y))/2} (trapezoid killing),
    // h-transformed and row-normalized; local weak error O(dt^2).
    small_dt_ = dt < resolved_time(m);

    std::vector<double> psis(static_cast<std::size_t>(n) * nb);
    for (int k = 0; k < n; ++k) m.psi_values(nodes_[k], &psis[static_cast<std::size_t>(k) * nb]);
    psi0_nodes_.resize(n);
    kill_nodes_.resize(n);
    for (int k = 0; k < n; ++k) {
        psi0_nodes_[k] = psis[static_cast<std::size_t>(k) * nb];
        kill_nodes_[k] = std::max(0.0, m.killing_at(nodes_[k]));
    }

    std::vector<double> decay(nb);
    for (int j = 0; j < nb; ++j) decay[j] = std::exp(-m.eigenvalues[j] * dt);
    const double el = std::exp(m.eigenvalues[0] * dt);

    cdf_rows_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* pi = &psis[static_cast<std::size_t>(i) * nb];
        double p0i = psi0_nodes_[i];
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            double val;
            if (small_dt_) {
                val = row_weight_small_dt(nodes_[i], kill_nodes_[i], p0i, k);
            } else {
                const double* pk = &psis[static_cast<std::size_t>(k) * nb];
                double q = simd::kernels().dot3(decay.data(), pi, pk, nb);
                val = q * (psi0_nodes_[k] / p0i) * el * m.quad.weights[k];
            }
            acc += std::max(0.0, val);
            cdf_rows_[static_cast<std::size_t>(i) * n + k] = acc;
        }
        double total = cdf_rows_[static_cast<std::size_t>(i) * n + n - 1];
        for (int k = 0; k < n; ++k) cdf_rows_[static_cast<std::size_t>(i) * n + k] /= total;
    }
}

double ImmortalChain::row_weight_small_dt(double x, double kill_x, double psi0_x, int k) const {
    const SpectralModel& m = *model_;
    double y = nodes_[k];
    // weights of m absorb the Gaussian density: w_k ~ p_1(y) * spacing, so
    // convert the Lebesgue OU kernel to the m-weighted grid via w_k / p_1(y)
    double p1y = std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI);
    double kill = std::exp(-0.5 * dt_ * (kill_x + kill_nodes_[k]) + m.eigenvalues[0] * dt_);
    return ou_kernel(dt_, x, y) * kill * (psi0_nodes_[k] / psi0_x) * m.quad.weights[k] / p1y;
}

int ImmortalChain::first_index(double x0, double u) const {
    const SpectralModel& m = *model_;
    const int n = static_cast<int>(nodes_.size());
    const int nb = m.basis_size;
    std::vector<double> p0(nb), pk(nb), decay(nb);
    m.psi_values(x0, p0.data());
    double psi0x = p0[0];
    if (!(psi0x > 0.0))
        throw std::invalid_argument("sample_immortal_path: psi0(x0) must be positive");
    for (int j = 0; j < nb; ++j) decay[j] = std::exp(-m.eigenvalues[j] * dt_);
    const double el = std::exp(m.eigenvalues[0] * dt_);
    std::vector<double> cdf(n);
    double acc = 0.0;
    const double kill_x0 = small_dt_ ? std::max(0.0, m.killing_at(x0)) : 0.0;
    for (int k = 0; k < n; ++k) {
        double val;
        if (small_dt_) {
            val = row_weight_small_dt(x0, kill_x0, psi0x, k);
        } else {
            m.psi_values(nodes_[k], pk.data());
            val = simd::kernels().dot3(decay.data(), p0.data(), pk.data(), nb) *
                  (psi0_nodes_[k] / psi0x) * el * m.quad.weights[k];
        }
        acc += std::max(0.0, val);
        cdf[k] = acc;
    }
    double target = u * acc;
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
}

std::vector<double> ImmortalChain::sample_path(double x0, int nsteps, Rng& rng) const {
    const int n = static_cast<int>(nodes_.size());
    std::vector<double> path(nsteps + 1);
    path[0] = x0;
    if (nsteps == 0) return path;
    int idx = first_index(x0, rng.uniform());
    path[1] = nodes_[idx];
    for (int s = 2; s <= nsteps; ++s) {
        const double* row = &cdf_rows_[static_cast<std::size_t>(idx) * n];
        double u = rng.uniform();
        idx = static_cast<int>(std::lower_bound(row, row + n, u) - row);
        if (idx == n) idx = n - 1;
        path[s] = nodes_[idx];
    }
    return path;
}

std::vector<double> sample_immortal_path(const SpectralModel& m, double x0, double horizon,
                                         double dt, uint64_t seed) {
    if (dt <= 0.0 || horizon < dt)
        throw std::invalid_argument("sample_immortal_path: need dt > 0 and horizon >= dt");
    ImmortalChain chain(m, dt);
    Rng rng(seed);
    int nsteps = static_cast<int>(std::floor(horizon / dt + 1e-12));
    return chain.sample_path(x0, nsteps, rng);
}

std::string spectral_model_to_json(const SpectralModel& m) {
    nlohmann::json j;
    j["basis_size"] = m.basis_size;
    j["eigenvalues"] = m.eigenvalues;
    j["eigvec_matrix"] = m.eigvec_rows;
    j["theta"] = m.theta;
    j["domain_bound"] = m.domain_bound;
    j["quadrature_order"] = m.quadrature_order;
    return j.dump(2);
}

SpectralModel spectral_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SpectralModel m;
    m.basis_size = j.at("basis_size").get<int>();
    m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    m.eigvec_rows = j.at("eigvec_matrix").get<std::vector<double>>();
    m.quadrature_order = j.at("quadrature_order").get<int>();
    if (m.eigvec_rows.size() != static_cast<std::size_t>(m.basis_size) * m.basis_size ||
        m.eigenvalues.size() != static_cast<std::size_t>(m.basis_size))
        throw std::invalid_argument("spectral model JSON: inconsistent sizes");
    m.quad = gauss_hermite(m.quadrature_order);
    finalize_model(m);
    double theta = j.at("theta").get<double>();
    double bound = j.at("domain_bound").get<double>();
    if (std::fabs(theta - m.theta) > 1e-9 || std::fabs(bound - m.domain_bound) > 1e-9)
        throw std::invalid_argument("spectral model JSON: derived fields mismatch");
    return m;
}

}  // namespace sblt
