#include "sblt/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sblt/moments.hpp"
#include "sblt/profile_f.hpp"
#include "sblt/rng.hpp"
#include "sblt/spectral.hpp"
#include "sblt/stats.hpp"
#include "sblt/vsolver.hpp"

namespace sblt {

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kCodeVersion = "sblt 1.0";

const std::set<std::string> kKinds = {"spectrum",       "f_profile", "v_scaling",
                                      "sim_moments",    "localtime_dim",
                                      "moment_validation", "constants"};

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double param(const ExperimentConfig& cfg, const char* key, double dflt) {
    auto it = cfg.params.find(key);
    return it == cfg.params.end() ? dflt : it->get<double>();
}

long lparam(const ExperimentConfig& cfg, const char* key, long dflt) {
    auto it = cfg.params.find(key);
    return it == cfg.params.end() ? dflt : it->get<long>();
}

struct ManifestBuilder {
    nlohmann::json j;
    nlohmann::json stages = nlohmann::json::array();
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::object();

    void metric(const std::string& key, double value, const std::string& op) {
        summary[key] = value;
        provenance[key] = op;
    }
    void stage(const std::string& name, std::vector<std::string> outputs) {
        nlohmann::json s;
        s["name"] = name;
        s["outputs"] = outputs;
        stages.push_back(s);
    }
};

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + tmp);
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    if (!j.contains("kind")) throw std::invalid_argument("config: missing 'kind'");
    cfg.kind = j.at("kind").get<std::string>();
    cfg.seed = j.value("seed", 1ull);
    cfg.replicates = j.value("replicates", 0l);
    cfg.output_dir = j.value("output_dir", std::string("."));
    cfg.params = j.value("params", nlohmann::json::object());
    validate_experiment_config(cfg);
    return cfg;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
    if (!kKinds.count(cfg.kind))
        throw std::invalid_argument("config: unknown kind '" + cfg.kind + "'");
    if (cfg.kind == "sim_moments" || cfg.kind == "moment_validation") {
        if (cfg.replicates < 1) throw std::invalid_argument("config: replicates >= 1 required");
        double dx = param(cfg, "dx", 0.02);
        double dt = param(cfg, "dt", 0.5 * dx * dx);
        if (dt > 0.5 * dx * dx * (1 + 1e-12))
            throw std::invalid_argument("config: dt must satisfy dt <= dx^2/2");
    }
    if (cfg.kind == "localtime_dim") {
        double dx = param(cfg, "dx", 0.002);
        if (dx <= 0) throw std::invalid_argument("config: dx > 0 required");
    }
    if (cfg.kind == "spectrum") {
        long nb = lparam(cfg, "basis_size", 48);
        long qo = lparam(cfg, "quadrature_order", 2 * nb + 32);
        if (nb < 4 || qo < 2 * nb)
            throw std::invalid_argument("config: basis_size >= 4, quadrature_order >= 2*basis_size");
    }
    if (cfg.kind == "f_profile") {
        if (param(cfg, "half_width", 8.0) < 6.0)
            throw std::invalid_argument("config: half_width >= 6 required");
        long n = lparam(cfg, "intervals", 8192);
        if (n < 512 || n % 2) throw std::invalid_argument("config: intervals even and >= 512");
    }
    if (cfg.kind == "constants" && lparam(cfg, "n_paths", 10000) < 10000)
        throw std::invalid_argument("config: n_paths >= 1e4 required");
}

SimMomentsResult run_sim_moments(double dx, double t, double mass, long replicates,
                                 uint64_t seed) {
    SimMomentsResult r;
    r.replicates = replicates;
    SpdeConfig cfg;
    cfg.dx = dx;
    long extinct = 0;
    r.masses.reserve(replicates);
    for (long k = 0; k < replicates; ++k) {
        auto f = simulate_spde(InitialMeasure::point(0.0, mass), t, cfg, derive_seed(seed, k));
        r.masses.push_back(f.mass());
        extinct += f.extinct();
    }
    auto mv = mean_var(r.masses);
    r.mean = mv.mean;
    r.mean_se = mv.stderr_mean();
    r.var = mv.var;
    double m4 = 0.0;
    for (double m : r.masses) m4 += std::pow(m - mv.mean, 4);
    m4 /= double(replicates);
    r.var_se = std::sqrt(std::max(0.0, m4 - mv.var * mv.var) / double(replicates));
    r.extinct_rate = double(extinct) / double(replicates);
    r.extinct_se = std::sqrt(r.extinct_rate * (1.0 - r.extinct_rate) / double(replicates));
    return r;
}

DimensionResult run_localtime_dim(double dx, double t, long min_surviving, uint64_t seed) {
    DimensionResult r;
    SpdeConfig cfg;
    cfg.dx = dx;
    // pad the domain so the scale ladder spans two decades above 4 dx
    cfg.domain_pad = std::max(0.0, 8.0 * (4.0 * dx * 128.0) - 12.0 * std::sqrt(t)) / 2.0 + 1.0;
    double width = 12.0 * std::sqrt(t) + 2.0 * cfg.domain_pad;
    std::vector<double> scales;
    for (double e = 4.0 * dx; e <= width / 8.0; e *= 2.0) scales.push_back(e);
    for (long k = 0; r.surviving < min_surviving; ++k) {
        if (k > 20 * min_surviving)
            throw std::runtime_error("localtime_dim: survival rate unexpectedly low");
        ++r.attempts;
        auto f = simulate_spde(InitialMeasure::point(0.0, 1.0), t, cfg, derive_seed(seed, k));
        if (f.extinct()) continue;
        auto b = boundary_set(f);
        auto fit = box_dimension(b, scales);
        if (!fit.reliable) continue;
        ++r.surviving;
        r.estimates.push_back(fit.slope);
        if (r.sample_fit_json.empty()) r.sample_fit_json = box_dimension_json(fit);
    }
    std::vector<double> sorted = r.estimates;
    std::sort(sorted.begin(), sorted.end());
    r.median = sorted[sorted.size() / 2];
    return r;
}

namespace {

void run_spectrum(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    auto profile = solve_f(param(cfg, "profile_half_width", 8.0),
                           lparam(cfg, "profile_intervals", 8192));
    long nb = lparam(cfg, "basis_size", 48);
    long qo = lparam(cfg, "quadrature_order", 2 * nb + 32);
    auto model = build_generator(scaled_profile_killing(profile), int(nb), int(qo));
    std::filesystem::path dir(cfg.output_dir);
    write_profile_csv(profile, (dir / "profile.csv").string());
    write_text_atomic((dir / "spectral_model.json").string(), spectral_model_to_json(model));
    mb.stage("spectrum", {"profile.csv", "spectral_model.json"});
    mb.metric("lambda0", model.lambda0(), "build_generator: lead killed rate");
    mb.metric("spectral_gap", model.spectral_gap(), "build_generator: lambda1 - lambda0");
    mb.metric("theta", model.theta, "build_generator: integral of psi0 against m");
    mb.metric("f_center", profile(0.0), "solve_f: profile at the origin");
    mb.metric("f_c1", profile.c1, "solve_f: tail constant");
    mb.metric("f_residual", profile.residual_norm, "solve_f: max interior residual");
}

void run_f_profile(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    auto profile = solve_f(param(cfg, "half_width", 8.0), lparam(cfg, "intervals", 8192));
    std::filesystem::path dir(cfg.output_dir);
    write_profile_csv(profile, (dir / "profile.csv").string());
    mb.stage("f_profile", {"profile.csv"});
    mb.metric("f_center", profile(0.0), "solve_f: profile at the origin");
    mb.metric("f_c1", profile.c1, "solve_f: tail constant");
    mb.metric("f_residual", profile.residual_norm, "solve_f: max interior residual");
}

void run_v_scaling(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    auto profile = solve_f(8.0, 8192);
    VFamily family;
    double lhs = family.v(2.0, 0.25, 0.5);
    double rhs = 4.0 * family.v(1.0, 1.0, 1.0);
    mb.metric("scaling_rel_err", std::fabs(lhs - rhs) / rhs,
              "v_point: lambda-r-t-x scaling identity");
    std::vector<double> ll, lg;
    for (double lam : {10.0, 20.0, 40.0, 80.0}) {
        double gap = 0.0;
        for (double x = -6.0; x <= 6.0; x += 0.05)
            gap = std::max(gap, profile(x) - family.v(lam, 1.0, x));
        ll.push_back(std::log(lam));
        lg.push_back(std::log(gap));
    }
    mb.metric("gap_exponent", fit_slope(ll, lg),
              "v_point: fitted large-lambda convergence exponent");
    std::filesystem::path dir(cfg.output_dir);
    std::vector<double> xg, tg = {param(cfg, "t", 1.0)};
    for (double x = -6.0; x <= 6.0; x += 0.05) xg.push_back(x);
    auto sol = v_point(family, param(cfg, "lambda", 10.0), xg, tg);
    write_vsolution_csv(sol, (dir / "v_table.csv").string());
    mb.stage("v_scaling", {"v_table.csv"});
}

void run_sim_moments_kind(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    double t = param(cfg, "t", 1.0), mass = param(cfg, "mass", 1.0);
    auto r = run_sim_moments(param(cfg, "dx", 0.02), t, mass, cfg.replicates, cfg.seed);
    std::filesystem::path dir(cfg.output_dir);
    std::ostringstream os;
    os << "mass\n";
    os.precision(17);
    for (double m : r.masses) os << m << '\n';
    write_text_atomic((dir / "masses.csv").string(), os.str());
    mb.stage("sim_moments", {"masses.csv"});
    mb.metric("mean_mass", r.mean, "simulate_spde: replicate mean of X_t(1)");
    mb.metric("mean_mass_z", (r.mean - mass) / r.mean_se, "mass martingale z-score");
    mb.metric("var_mass", r.var, "simulate_spde: replicate variance of X_t(1)");
    mb.metric("var_mass_z", (r.var - mass * t) / r.var_se, "branching variance z-score");
    mb.metric("extinction_rate", r.extinct_rate, "simulate_spde: fraction extinct");
    double p = std::exp(-2.0 * mass / t);
    mb.metric("extinction_z", (r.extinct_rate - p) / r.extinct_se,
              "extinction-probability z-score");
}

void run_localtime_dim_kind(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    double dx = param(cfg, "dx", 0.002), t = param(cfg, "t", 1.0);
    long n = cfg.replicates > 0 ? cfg.replicates : 200;
    auto r = run_localtime_dim(dx, t, n, cfg.seed);
    std::filesystem::path dir(cfg.output_dir);
    std::ostringstream os;
    os << "dimension\n";
    for (double d : r.estimates) os << d << '\n';
    write_text_atomic((dir / "dims.csv").string(), os.str());
    write_text_atomic((dir / "sample_fit.json").string(), r.sample_fit_json);
    mb.stage("localtime_dim", {"dims.csv", "sample_fit.json"});
    mb.metric("dimension_median", r.median, "box_dimension: ensemble median slope");
    mb.metric("surviving", double(r.surviving), "simulate_spde: surviving replicates");
}

void run_constants_kind(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    auto profile = solve_f(8.0, 8192);
    auto model = build_generator(scaled_profile_killing(profile), 48, 128);
    VFamily family;
    F2Table f2(family, profile, model.lambda0());
    auto bundle = build_constants(profile, model, family, f2,
                                  lparam(cfg, "n_paths", 10000), cfg.seed);
    std::filesystem::path dir(cfg.output_dir);
    write_text_atomic((dir / "constants.json").string(), constants_to_json(bundle));
    write_text_atomic((dir / "f2_ladder.json").string(), f2.ladder_report_json());
    mb.stage("constants", {"constants.json", "f2_ladder.json"});
    mb.metric("C", bundle.C, "estimate_c: global first-moment constant");
    mb.metric("C_stderr", bundle.C_stderr, "estimate_c: monte carlo error");
    mb.metric("theta", bundle.theta, "build_generator: integral of psi0");
    mb.metric("lambda0", bundle.lambda0, "build_generator: lead killed rate");
    mb.metric("cz_empirical", bundle.cz_empirical, "z_factor: max sampled Z");
    mb.metric("cz_bound", bundle.cz_bound, "z_factor: rate-integrated cap");
}

void run_moment_validation(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    auto profile = solve_f(8.0, 8192);
    auto model = build_generator(scaled_profile_killing(profile), 48, 128);
    VFamily family;
    ConstantsBundle bundle;
    std::string cpath = cfg.params.value("constants_path", std::string());
    if (!cpath.empty()) {
        std::ifstream is(cpath);
        std::stringstream ss;
        ss << is.rdbuf();
        bundle = constants_from_json(ss.str());
    } else {
        F2Table f2(family, profile, model.lambda0());
        bundle = build_constants(profile, model, family, f2,
                                 lparam(cfg, "n_paths", 10000), derive_seed(cfg.seed, 1));
    }

    const double t = param(cfg, "t", 1.0);
    const double dx = param(cfg, "dx", 0.01);
    const long reps = cfg.replicates;
    SpdeConfig scfg;
    scfg.dx = dx;
    auto one = [](double) { return 1.0; };

    // canonical moments from single surviving clusters (rejection sampling);
    // the ladder anchor is the pooled positive median over the sample
    const double m0 = 0.01 * t;
    std::vector<double> lt1, lt2;
    {
        double reach = 6.0 * std::sqrt(t);
        SpdeConfig ccfg = scfg;
        ccfg.fixed_domain = true;
        ccfg.fixed_left = -reach;
        ccfg.fixed_right = reach;
        ccfg.mass_guard = 100.0 * std::max(1.0, t / m0);
        std::vector<DensityField> fields;
        long k = 0;
        double pooled = 0.0;
        while (static_cast<long>(fields.size()) < reps) {
            auto f = simulate_spde(InitialMeasure::point(0.0, m0), t, ccfg,
                                   derive_seed(cfg.seed, 100000 + k++));
            if (f.extinct()) continue;
            pooled += positive_density_median(f);
            fields.push_back(std::move(f));
        }
        pooled /= double(fields.size());
        for (auto& f : fields) {
            double v = estimate_local_time(f, bundle.lambda0, 0.02, 14, pooled).measure.total();
            lt1.push_back(v);
            lt2.push_back(v * v);
        }
    }
    auto m1 = mean_var(lt1);
    auto m2 = mean_var(lt2);
    double canon_mc = (2.0 / t) * m1.mean;       // N0 = (2/t) * conditional mean
    double canon_mc_se = (2.0 / t) * m1.stderr_mean();
    double canon_formula = canonical_first_moment(one, t, bundle, model);
    mb.metric("canonical_first_mc", canon_mc, "estimate_local_time over clusters");
    mb.metric("canonical_first_formula", canon_formula, "canonical_first_moment");
    mb.metric("canonical_first_z", (canon_mc - canon_formula) / canon_mc_se,
              "first-moment validation z-score");
    double sm_mc = (2.0 / t) * m2.mean;
    double sm_bound = second_moment_mass_bound(t, bundle);
    mb.metric("canonical_second_mc", sm_mc, "cluster second moment (2/t normalized)");
    mb.metric("canonical_second_bound", sm_bound, "second_moment_mass_bound");
    mb.metric("canonical_second_margin_z",
              (sm_bound - sm_mc) / ((2.0 / t) * m2.stderr_mean()),
              "bound-margin z-score (positive = below bound)");

    // superprocess moments from direct simulations (pooled anchor again)
    std::vector<double> dl1, dl2;
    {
        std::vector<DensityField> fields;
        double pooled = 0.0;
        long alive = 0;
        for (long k = 0; k < reps; ++k) {
            auto f = simulate_spde(InitialMeasure::point(0.0, 1.0), t, scfg,
                                   derive_seed(cfg.seed, 200000 + k));
            double med = positive_density_median(f);
            if (med > 0.0) {
                pooled += med;
                ++alive;
            }
            fields.push_back(std::move(f));
        }
        pooled /= double(alive);
        for (auto& f : fields) {
            double v = estimate_local_time(f, bundle.lambda0, 0.02, 14, pooled).measure.total();
            dl1.push_back(v);
            dl2.push_back(v * v);
        }
    }
    auto d1 = mean_var(dl1);
    auto d2 = mean_var(dl2);
    double px_formula =
        px_first_moment(one, t, InitialMeasure::point(0.0, 1.0), profile, bundle, model);
    mb.metric("px_first_mc", d1.mean, "estimate_local_time over direct fields");
    mb.metric("px_first_formula", px_formula, "px_first_moment");
    mb.metric("px_first_z", (d1.mean - px_formula) / d1.stderr_mean(),
              "first-moment validation z-score");
    double px_bound = px_second_moment_bound(t, InitialMeasure::point(0.0, 1.0), bundle);
    mb.metric("px_second_mc", d2.mean, "direct second moment");
    mb.metric("px_second_bound", px_bound, "px_second_moment_bound");
    mb.metric("px_second_margin_z", (px_bound - d2.mean) / d2.stderr_mean(),
              "bound-margin z-score (positive = below bound)");

    std::vector<MomentReport> reports;
    reports.push_back({"canonical_first", canon_formula, canon_mc, canon_mc_se,
                       static_cast<long>(lt1.size()),
                       (canon_mc - canon_formula) / canon_mc_se});
    reports.push_back({"px_first", px_formula, d1.mean, d1.stderr_mean(),
                       static_cast<long>(dl1.size()),
                       (d1.mean - px_formula) / d1.stderr_mean()});
    std::filesystem::path dir(cfg.output_dir);
    write_text_atomic((dir / "moment_reports.jsonl").string(), moment_report_jsonl(reports));
    mb.stage("moment_validation", {"moment_reports.jsonl"});
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    validate_experiment_config(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    ManifestBuilder mb;
    nlohmann::json cfgj;
    cfgj["kind"] = cfg.kind;
    cfgj["seed"] = cfg.seed;
    cfgj["replicates"] = cfg.replicates;
    cfgj["params"] = cfg.params;
    mb.j["schema_version"] = kSchemaVersion;
    mb.j["code_version"] = kCodeVersion;
    mb.j["config"] = cfgj;
    mb.j["config_hash"] = fnv1a(cfgj.dump());
    mb.j["started_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();

    RunOutcome out;
    try {
        if (cfg.kind == "spectrum")
            run_spectrum(cfg, mb);
        else if (cfg.kind == "f_profile")
            run_f_profile(cfg, mb);
        else if (cfg.kind == "v_scaling")
            run_v_scaling(cfg, mb);
        else if (cfg.kind == "sim_moments")
            run_sim_moments_kind(cfg, mb);
        else if (cfg.kind == "localtime_dim")
            run_localtime_dim_kind(cfg, mb);
        else if (cfg.kind == "constants")
            run_constants_kind(cfg, mb);
        else if (cfg.kind == "moment_validation")
            run_moment_validation(cfg, mb);
    } catch (const std::exception& e) {
        out.failed = true;
        out.failure = e.what();
        mb.j["failed_stage"] = cfg.kind;
        mb.j["diagnostics"] = e.what();
    }

    mb.j["stages"] = mb.stages;
    mb.j["summary"] = mb.summary;
    mb.j["provenance"] = mb.provenance;
    mb.j["finished_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_text_atomic((std::filesystem::path(cfg.output_dir) / "manifest.json").string(),
                      mb.j.dump(2));
    out.manifest = mb.j;
    return out;
}

std::string report_csv(const std::vector<std::string>& manifest_paths) {
    std::vector<nlohmann::json> manifests;
    std::set<long> versions;
    for (auto& p : manifest_paths) {
        std::ifstream is(p);
        if (!is) throw std::runtime_error("cannot open " + p);
        nlohmann::json j;
        is >> j;
        versions.insert(j.value("schema_version", 0l));
        manifests.push_back(std::move(j));
    }
    if (versions.size() > 1) {
        std::ostringstream os;
        os << "report: mixed manifest schema versions:";
        for (long v : versions) os << ' ' << v;
        throw std::runtime_error(os.str());
    }
    std::set<std::string> cols;
    for (auto& m : manifests)
        for (auto& [k, v] : m.at("summary").items()) cols.insert(k);

    std::ostringstream os;
    os << "kind,config_hash";
    for (auto& c : cols) os << ',' << c;
    os << '\n';
    os.precision(12);
    for (auto& m : manifests) {
        os << m.at("config").at("kind").get<std::string>() << ','
           << m.at("config_hash").get<uint64_t>();
        for (auto& c : cols) {
            os << ',';
            if (m.at("summary").contains(c)) os << m.at("summary").at(c).get<double>();
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace sblt
