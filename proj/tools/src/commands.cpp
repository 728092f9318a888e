#include "ulrates_cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ulrates/dms.hpp"
#include "ulrates/dynamics.hpp"
#include "ulrates/errors.hpp"
#include "ulrates/potentials.hpp"
#include "ulrates/rates.hpp"
#include "ulrates/spectral.hpp"
#include "ulrates/version.hpp"
#include "ulrates_cli/io.hpp"

namespace ulrates_cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config-file handling
//
// Precedence: defaults < config file < explicit flags.  CLI11 has already
// parsed the flags when merge_config runs, so a key from the file is applied
// only when the matching option was left at its default (count() == 0).

json load_config_file(const std::string& path,
                      const std::set<std::string>& allowed) {
    std::ifstream in(path);
    if (!in)
        throw ulrates::invalid_parameter_error("config file not readable: " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ulrates::invalid_parameter_error(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object())
        throw ulrates::invalid_parameter_error("config file must hold a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ulrates::invalid_parameter_error("unknown config key: \"" + it.key() + "\"");
    }
    return cfg;
}

void merge_double(const json& cfg, const char* key, CLI::Option* opt, double* slot) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg.at(key).is_number())
        throw ulrates::invalid_parameter_error(std::string("config key \"") + key + "\" must be a number");
    *slot = cfg.at(key).get<double>();
}

void merge_int(const json& cfg, const char* key, CLI::Option* opt, int* slot) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg.at(key).is_number_integer())
        throw ulrates::invalid_parameter_error(std::string("config key \"") + key + "\" must be an integer");
    *slot = cfg.at(key).get<int>();
}

void merge_string(const json& cfg, const char* key, CLI::Option* opt, std::string* slot) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg.at(key).is_string())
        throw ulrates::invalid_parameter_error(std::string("config key \"") + key + "\" must be a string");
    *slot = cfg.at(key).get<std::string>();
}

// Output directory: flag wins, then ULRATES_OUTPUT_DIR, then the current
// directory.
std::filesystem::path resolve_outdir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("ULRATES_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

// Where and what to write: resolved output directory plus the artifact-kind
// filter (json | csv | both). The manifest itself is always written.
struct Out {
    std::filesystem::path dir;
    std::string format = "both";
};

std::string regime_name(ulrates::RegimeR::Regime r) {
    switch (r) {
        case ulrates::RegimeR::Regime::Convex: return "convex";
        case ulrates::RegimeR::Regime::HessianLB: return "hessian_lb";
        case ulrates::RegimeR::Regime::General: return "general";
    }
    return "general";
}

json rate_result_json(const ulrates::RateResult& r) {
    return json{{"lambda", r.lambda},
                {"inputs",
                 {{"m", r.inputs.m},
                  {"gamma", r.inputs.gamma},
                  {"R", r.inputs.R},
                  {"c0", r.inputs.c0}}},
                {"regime", regime_name(r.regime.regime)},
                {"has_universal_prefactor", r.has_universal_prefactor}};
}

ulrates::RateResult eval_main_rate(double m, double gamma, double R, double c0) {
    ulrates::RateInputs in;
    in.m = m;
    in.gamma = gamma;
    in.R = R;
    in.c0 = c0;
    return ulrates::main_rate(in);
}

json fit_json(const ulrates::DecayFit& f) {
    return json{{"rate", f.rate},
                {"log_intercept", f.log_intercept},
                {"window", {{"t_start", f.t_start}, {"t_end", f.t_end}}},
                {"residual_rms", f.residual_rms},
                {"mode", f.mode == ulrates::FitMode::Envelope ? "envelope" : "tail_linear"}};
}

void write_json_artifact(Manifest& man, const Out& out, const std::string& stem,
                         const json& payload) {
    if (out.format == "csv") return;
    const std::string name = stem + "_" + man.run_id() + ".json";
    atomic_write(out.dir / name, payload.dump(2) + "\n");
    man.add_artifact(name);
}

void write_csv_artifact(Manifest& man, const Out& out, const std::string& stem,
                        const CsvTable& table) {
    if (out.format == "json") return;
    const std::string name = stem + "_" + man.run_id() + ".csv";
    atomic_write(out.dir / name, table.str());
    man.add_artifact(name);
}

// ---------------------------------------------------------------------------
// rate

int cmd_rate(const std::string& config_path, const Out& out,
             double m, double gamma, double R, double c0,
             CLI::Option* om, CLI::Option* og, CLI::Option* oR, CLI::Option* oc) {
    static const std::set<std::string> keys{"m", "gamma", "R", "c0"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "gamma", og, &gamma);
        merge_double(cfg, "R", oR, &R);
        merge_double(cfg, "c0", oc, &c0);
    }
    const json resolved{{"m", m}, {"gamma", gamma}, {"R", R}, {"c0", c0},
                        {"format", out.format}};
    ulrates::RateResult r = eval_main_rate(m, gamma, R, c0);

    Manifest man("rate", resolved);
    write_json_artifact(man, out, "rate", rate_result_json(r));
    man.write(out.dir);
    std::printf("lambda = %s\n", format_double(r.lambda).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// sweep-gamma

int cmd_sweep_gamma(const std::string& config_path, const Out& out,
                    double m, double R, double c0, double gmin, double gmax,
                    int num, std::string spacing,
                    CLI::Option* om, CLI::Option* oR, CLI::Option* oc,
                    CLI::Option* olo, CLI::Option* ohi, CLI::Option* on,
                    CLI::Option* osp) {
    static const std::set<std::string> keys{"m", "R", "c0", "gamma_min", "gamma_max", "num", "spacing"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "R", oR, &R);
        merge_double(cfg, "c0", oc, &c0);
        merge_double(cfg, "gamma_min", olo, &gmin);
        merge_double(cfg, "gamma_max", ohi, &gmax);
        merge_int(cfg, "num", on, &num);
        merge_string(cfg, "spacing", osp, &spacing);
    }
    if (num < 2) throw ulrates::invalid_parameter_error("num must be >= 2");
    if (!(gmin > 0.0) || !(gmax > gmin))
        throw ulrates::invalid_parameter_error("need 0 < gamma_min < gamma_max");
    if (spacing != "log" && spacing != "linear")
        throw ulrates::invalid_parameter_error("spacing must be \"log\" or \"linear\"");

    std::vector<double> grid(static_cast<size_t>(num));
    for (int i = 0; i < num; ++i) {
        const double s = static_cast<double>(i) / (num - 1);
        grid[static_cast<size_t>(i)] =
            spacing == "log" ? gmin * std::pow(gmax / gmin, s) : gmin + s * (gmax - gmin);
    }
    auto curve = ulrates::gamma_sweep(m, R, c0, grid);

    CsvTable table({"gamma", "lambda"});
    size_t best = 0;
    for (size_t i = 0; i < curve.size(); ++i) {
        table.add_row({format_double(curve[i].first), format_double(curve[i].second)});
        if (curve[i].second > curve[best].second) best = i;
    }

    const json resolved{{"m", m},       {"R", R},           {"c0", c0},
                        {"gamma_min", gmin}, {"gamma_max", gmax}, {"num", num},
                        {"spacing", spacing}, {"format", out.format}};
    const json summary{{"m", m},
                       {"R", R},
                       {"c0", c0},
                       {"num", num},
                       {"argmax_gamma", curve[best].first},
                       {"lambda_max", curve[best].second},
                       {"gamma_star_closed_form", ulrates::optimal_gamma(m) + R}};

    Manifest man("sweep-gamma", resolved);
    write_csv_artifact(man, out, "sweep_gamma", table);
    write_json_artifact(man, out, "sweep_gamma", summary);
    man.write(out.dir);
    std::printf("argmax gamma = %s, lambda = %s\n",
                format_double(curve[best].first).c_str(),
                format_double(curve[best].second).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// dms

int cmd_dms(const std::string& config_path, const Out& out,
            double gamma, double m, double K, double epsilon, bool eps_given,
            CLI::Option* og, CLI::Option* om, CLI::Option* oK, CLI::Option* oe) {
    static const std::set<std::string> keys{"gamma", "m", "K", "epsilon"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_double(cfg, "gamma", og, &gamma);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "K", oK, &K);
        if (oe->count() == 0 && cfg.contains("epsilon")) {
            if (!cfg.at("epsilon").is_number())
                throw ulrates::invalid_parameter_error("config key \"epsilon\" must be a number");
            epsilon = cfg.at("epsilon").get<double>();
            eps_given = true;
        }
    }
    const double r_ham = ulrates::r_ham_bound(K);

    json resolved{{"gamma", gamma}, {"m", m}, {"K", K}, {"format", out.format}};
    json payload;
    double lambda = 0.0;
    if (eps_given) {
        resolved["epsilon"] = epsilon;
        ulrates::DmsInputs in;
        in.gamma = gamma;
        in.m = m;
        in.r_ham = r_ham;
        in.epsilon = epsilon;
        lambda = ulrates::dms_rate(in);
        payload = json{{"gamma", gamma},
                       {"m", m},
                       {"K", K},
                       {"r_ham", r_ham},
                       {"epsilon", epsilon},
                       {"lambda", lambda},
                       {"prefactor", ulrates::dms_equivalence_prefactor(epsilon)}};
    } else {
        ulrates::DmsOptimum opt = ulrates::dms_optimize(gamma, m, r_ham);
        lambda = opt.lambda_star;
        payload = json{{"gamma", gamma},
                       {"m", m},
                       {"K", K},
                       {"r_ham", r_ham},
                       {"epsilon_star", opt.epsilon_star},
                       {"lambda_star", opt.lambda_star},
                       {"prefactor", ulrates::dms_equivalence_prefactor(opt.epsilon_star)},
                       {"at_boundary", opt.at_boundary},
                       {"evaluations", opt.evaluations}};
    }

    Manifest man("dms", resolved);
    write_json_artifact(man, out, "dms", payload);
    man.write(out.dir);
    std::printf("lambda = %s\n", format_double(lambda).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// spectrum (exact quadratic) and galerkin (Hermite truncation)

int cmd_spectrum(const std::string& config_path, const Out& out,
                 double m, double gamma, int nmax,
                 CLI::Option* om, CLI::Option* og, CLI::Option* on) {
    static const std::set<std::string> keys{"m", "gamma", "nmax"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "gamma", og, &gamma);
        merge_int(cfg, "nmax", on, &nmax);
    }
    ulrates::SpectrumResult res = ulrates::quadratic_spectrum(m, gamma, nmax);

    CsvTable table({"i", "j", "re", "im"});
    size_t idx = 0;
    for (int i = 0; i <= nmax; ++i) {
        for (int j = 0; j <= nmax; ++j) {
            table.add_row({std::to_string(i), std::to_string(j),
                           format_double(res.eigenvalues[idx].real()),
                           format_double(res.eigenvalues[idx].imag())});
            ++idx;
        }
    }

    const json resolved{{"m", m}, {"gamma", gamma}, {"nmax", nmax},
                        {"format", out.format}};
    const json summary{{"m", m},
                       {"gamma", gamma},
                       {"nmax", nmax},
                       {"gap", res.gap},
                       {"n_eigenvalues", static_cast<int>(res.eigenvalues.size())},
                       {"truncation", nullptr}};

    Manifest man("spectrum", resolved);
    write_csv_artifact(man, out, "spectrum", table);
    write_json_artifact(man, out, "spectrum", summary);
    man.write(out.dir);
    std::printf("gap = %s\n", format_double(res.gap).c_str());
    return 0;
}

int cmd_galerkin(const std::string& config_path, const Out& out,
                 double m, double gamma, int N,
                 CLI::Option* om, CLI::Option* og, CLI::Option* oN) {
    static const std::set<std::string> keys{"m", "gamma", "N"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "gamma", og, &gamma);
        merge_int(cfg, "N", oN, &N);
    }
    ulrates::GeneratorMatrix gen = ulrates::build_generator_hermite(m, gamma, N);
    ulrates::SpectrumResult res = ulrates::matrix_gap(gen);
    ulrates::SpectrumResult exact = ulrates::quadratic_spectrum(m, gamma, N);

    // Each computed eigenvalue is labeled by the nearest exact mode (i,j);
    // near critical damping several computed values may share a label.
    struct Row {
        int i, j;
        std::complex<double> ev;
    };
    std::vector<Row> rows;
    rows.reserve(res.eigenvalues.size());
    for (const auto& ev : res.eigenvalues) {
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < exact.eigenvalues.size(); ++k) {
            const double d = std::abs(ev - exact.eigenvalues[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        const int i = static_cast<int>(best) / (N + 1);
        const int j = static_cast<int>(best) % (N + 1);
        rows.push_back({i, j, ev});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.ev.real() != b.ev.real()) return a.ev.real() < b.ev.real();
        if (a.ev.imag() != b.ev.imag()) return a.ev.imag() < b.ev.imag();
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });

    CsvTable table({"i", "j", "re", "im"});
    for (const Row& r : rows)
        table.add_row({std::to_string(r.i), std::to_string(r.j),
                       format_double(r.ev.real()), format_double(r.ev.imag())});

    const json resolved{{"m", m}, {"gamma", gamma}, {"N", N},
                        {"format", out.format}};
    const json summary{{"m", m},
                       {"gamma", gamma},
                       {"gap", res.gap},
                       {"n_eigenvalues", static_cast<int>(res.eigenvalues.size())},
                       {"truncation", N},
                       {"gap_exact", ulrates::quadratic_gap(m, gamma)}};

    Manifest man("galerkin", resolved);
    write_csv_artifact(man, out, "galerkin", table);
    write_json_artifact(man, out, "galerkin", summary);
    man.write(out.dir);
    std::printf("gap = %s (truncation N = %d)\n", format_double(res.gap).c_str(), N);
    return 0;
}

// ---------------------------------------------------------------------------
// poincare

int cmd_poincare(const std::string& config_path, const Out& out,
                 std::string potential, double m, double xmin, double xmax, int n,
                 CLI::Option* op, CLI::Option* om, CLI::Option* olo,
                 CLI::Option* ohi, CLI::Option* on) {
    static const std::set<std::string> keys{"potential", "m", "xmin", "xmax", "n"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_string(cfg, "potential", op, &potential);
        merge_double(cfg, "m", om, &m);
        merge_double(cfg, "xmin", olo, &xmin);
        merge_double(cfg, "xmax", ohi, &xmax);
        merge_int(cfg, "n", on, &n);
    }
    ulrates::PotentialSpec spec;
    if (potential == "quadratic") {
        spec = ulrates::make_isotropic_quadratic(m, 1);
        if (std::isnan(xmin)) xmin = -8.0 / std::sqrt(m);
        if (std::isnan(xmax)) xmax = 8.0 / std::sqrt(m);
    } else if (potential == "double_well") {
        spec = ulrates::make_double_well(1);
        if (std::isnan(xmin)) xmin = -3.0;
        if (std::isnan(xmax)) xmax = 3.0;
    } else {
        throw ulrates::invalid_parameter_error("potential must be \"quadratic\" or \"double_well\"");
    }

    ulrates::PoincareEstimate est = ulrates::poincare_fd(spec, xmin, xmax, n);
    ulrates::PoincareEstimate coarse = ulrates::poincare_fd(spec, xmin, xmax, n / 2);
    // Second-order stencil: halving the error when the grid doubles means the
    // forward change is about a quarter of the backward one; a factor-two
    // cushion on the backward difference is a safe certificate.
    const double tolerance =
        2.0 * std::abs(est.m_hat - coarse.m_hat) + 1e-12 * std::abs(est.m_hat);

    json resolved{{"potential", potential}, {"xmin", xmin}, {"xmax", xmax}, {"n", n},
                  {"format", out.format}};
    if (potential == "quadratic") resolved["m"] = m;
    const json payload{{"m_hat", est.m_hat},
                       {"grid", {{"x_min", est.x_min}, {"x_max", est.x_max}, {"n_points", est.n_points}}},
                       {"tolerance", tolerance},
                       {"eigen_iterations", est.eigen_iterations}};

    Manifest man("poincare", resolved);
    write_json_artifact(man, out, "poincare", payload);
    man.write(out.dir);
    std::printf("m_hat = %s +/- %s\n", format_double(est.m_hat).c_str(),
                format_double(tolerance).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

ulrates::InitialCondition parse_init(const json& j, int d) {
    ulrates::InitialCondition init;
    if (!j.is_object()) throw ulrates::invalid_parameter_error("init must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "kind" && it.key() != "mean" && it.key() != "cov")
            throw ulrates::invalid_parameter_error("unknown config key: \"init." + it.key() + "\"");
    }
    const std::string kind = j.value("kind", "point_mass");
    if (kind == "point_mass")
        init.kind = ulrates::InitialCondition::Kind::PointMass;
    else if (kind == "gaussian")
        init.kind = ulrates::InitialCondition::Kind::Gaussian;
    else
        throw ulrates::invalid_parameter_error("init.kind must be \"point_mass\" or \"gaussian\"");

    init.mean = Eigen::VectorXd::Zero(2 * d);
    if (j.contains("mean")) {
        const auto& mv = j.at("mean");
        if (!mv.is_array() || static_cast<int>(mv.size()) != 2 * d)
            throw ulrates::invalid_parameter_error("init.mean must be an array of length 2*d (positions then velocities)");
        for (int k = 0; k < 2 * d; ++k) init.mean[k] = mv.at(static_cast<size_t>(k)).get<double>();
    }
    if (init.kind == ulrates::InitialCondition::Kind::Gaussian) {
        init.covariance = Eigen::MatrixXd::Identity(2 * d, 2 * d);
        if (j.contains("cov")) {
            const auto& cv = j.at("cov");
            if (!cv.is_array() || static_cast<int>(cv.size()) != 2 * d)
                throw ulrates::invalid_parameter_error("init.cov must be a (2*d)x(2*d) array of arrays");
            for (int r = 0; r < 2 * d; ++r) {
                const auto& row = cv.at(static_cast<size_t>(r));
                if (!row.is_array() || static_cast<int>(row.size()) != 2 * d)
                    throw ulrates::invalid_parameter_error("init.cov must be a (2*d)x(2*d) array of arrays");
                for (int c = 0; c < 2 * d; ++c)
                    init.covariance(r, c) = row.at(static_cast<size_t>(c)).get<double>();
            }
        }
    }
    return init;
}

int cmd_simulate(const std::string& config_path, const Out& out,
                 int workers_flag, CLI::Option* ow) {
    if (config_path.empty())
        throw ulrates::invalid_parameter_error("simulate requires --config");
    static const std::set<std::string> keys{"potential", "scheme",  "dt",    "t_final",
                                            "gamma",     "n_traj",  "seed",  "init",
                                            "observables", "output_every", "workers", "fit"};
    json cfg = load_config_file(config_path, keys);

    for (const char* req : {"potential", "dt", "t_final", "n_traj"}) {
        if (!cfg.contains(req))
            throw ulrates::invalid_parameter_error(std::string("missing config key: \"") + req + "\"");
    }
    ulrates::PotentialSpec spec = ulrates::potential_from_json(cfg.at("potential").dump());

    ulrates::IntegratorConfig icfg;
    const std::string scheme = cfg.value("scheme", "euler_maruyama");
    if (scheme == "euler_maruyama")
        icfg.scheme = ulrates::Scheme::EulerMaruyama;
    else if (scheme == "splitting")
        icfg.scheme = ulrates::Scheme::Splitting;
    else
        throw ulrates::invalid_parameter_error("scheme must be \"euler_maruyama\" or \"splitting\"");
    icfg.dt = cfg.at("dt").get<double>();
    icfg.t_final = cfg.at("t_final").get<double>();
    icfg.gamma = cfg.value("gamma", 1.0);
    icfg.seed = cfg.value("seed", std::uint64_t{12345});

    const int n_traj = cfg.at("n_traj").get<int>();
    const int output_every = cfg.value("output_every", 1);
    int workers = cfg.value("workers", 1);
    if (ow->count() > 0) workers = workers_flag;

    ulrates::InitialCondition init;
    if (cfg.contains("init")) {
        init = parse_init(cfg.at("init"), spec.dimension);
    } else {
        init.kind = ulrates::InitialCondition::Kind::PointMass;
        init.mean = Eigen::VectorXd::Zero(2 * spec.dimension);
        init.mean[0] = 1.0;
    }

    std::vector<ulrates::Observable> obs;
    if (cfg.contains("observables")) {
        if (!cfg.at("observables").is_array())
            throw ulrates::invalid_parameter_error("observables must be an array of names");
        for (const auto& name : cfg.at("observables"))
            obs.push_back(ulrates::observable_by_name(name.get<std::string>()));
    } else {
        obs.push_back(ulrates::observable_by_name("x"));
    }

    ulrates::EnsembleSeries series =
        ulrates::simulate_ensemble(spec, icfg, n_traj, init, obs, output_every, workers);

    std::vector<std::string> header{"t"};
    for (const auto& o : obs) {
        header.push_back(o.name + "_mean");
        header.push_back(o.name + "_stderr");
    }
    CsvTable table(header);
    for (size_t k = 0; k < series.times.size(); ++k) {
        std::vector<std::string> row{format_double(series.times[k])};
        for (size_t oi = 0; oi < obs.size(); ++oi) {
            row.push_back(format_double(series.means[k][oi]));
            row.push_back(format_double(series.stderrs[k][oi]));
        }
        table.add_row(row);
    }

    // The hashed config never includes worker count: the reduction is
    // schedule-independent, so the artifact bytes do not depend on it.
    json resolved = cfg;
    resolved.erase("workers");
    resolved["format"] = out.format;

    Manifest man("simulate", resolved);
    write_csv_artifact(man, out, "simulate", table);

    if (cfg.contains("fit")) {
        const json& fj = cfg.at("fit");
        for (auto it = fj.begin(); it != fj.end(); ++it) {
            static const std::set<std::string> fkeys{"mode", "observable", "t_start", "t_end"};
            if (!fkeys.count(it.key()))
                throw ulrates::invalid_parameter_error("unknown config key: \"fit." + it.key() + "\"");
        }
        const std::string mode_s = fj.value("mode", "tail_linear");
        ulrates::FitMode mode;
        if (mode_s == "tail_linear")
            mode = ulrates::FitMode::TailLinear;
        else if (mode_s == "envelope")
            mode = ulrates::FitMode::Envelope;
        else
            throw ulrates::invalid_parameter_error("fit.mode must be \"tail_linear\" or \"envelope\"");
        const std::string oname = fj.value("observable", obs[0].name);
        size_t oi = 0;
        bool found = false;
        for (size_t k = 0; k < obs.size(); ++k)
            if (obs[k].name == oname) {
                oi = k;
                found = true;
            }
        if (!found)
            throw ulrates::invalid_parameter_error("fit.observable \"" + oname + "\" is not among the recorded observables");
        const double t_start = fj.value("t_start", series.times.front());
        const double t_end = fj.value("t_end", series.times.back());
        std::vector<double> vals(series.times.size());
        for (size_t k = 0; k < vals.size(); ++k) vals[k] = std::abs(series.means[k][oi]);
        ulrates::DecayFit fit =
            ulrates::fit_decay(series.times, vals, mode, t_start, t_end);
        write_json_artifact(man, out, "simulate_fit", fit_json(fit));
        std::printf("fit rate = %s\n", format_double(fit.rate).c_str());
    }

    man.write(out.dir);
    std::printf("wrote %zu output times, n_traj = %d\n", series.times.size(), n_traj);
    return 0;
}

// ---------------------------------------------------------------------------
// fit (CSV in, decay rate out)

int cmd_fit(const std::string& config_path, const Out& out,
            std::string input, std::string value_col, std::string time_col,
            std::string mode_s, double t_start, double t_end,
            CLI::Option* oin, CLI::Option* oval, CLI::Option* otc,
            CLI::Option* omode, CLI::Option* ots, CLI::Option* ote) {
    static const std::set<std::string> keys{"input", "value_col", "time_col",
                                            "mode",  "t_start",   "t_end"};
    if (!config_path.empty()) {
        json cfg = load_config_file(config_path, keys);
        merge_string(cfg, "input", oin, &input);
        merge_string(cfg, "value_col", oval, &value_col);
        merge_string(cfg, "time_col", otc, &time_col);
        merge_string(cfg, "mode", omode, &mode_s);
        merge_double(cfg, "t_start", ots, &t_start);
        merge_double(cfg, "t_end", ote, &t_end);
    }
    if (input.empty()) throw ulrates::invalid_parameter_error("fit requires --input CSV path");
    if (value_col.empty()) throw ulrates::invalid_parameter_error("fit requires --value-col");

    std::ifstream in(input);
    if (!in) throw ulrates::invalid_parameter_error("input file not readable: " + input);
    std::stringstream buf;
    buf << in.rdbuf();
    ParsedCsv table = parse_csv(buf.str());

    auto col_of = [&table](const std::string& name) {
        for (size_t c = 0; c < table.header.size(); ++c)
            if (table.header[c] == name) return static_cast<std::ptrdiff_t>(c);
        return std::ptrdiff_t{-1};
    };
    const std::ptrdiff_t tcol = col_of(time_col);
    const std::ptrdiff_t vcol = col_of(value_col);
    if (tcol < 0) throw ulrates::invalid_parameter_error("no such column: \"" + time_col + "\"");
    if (vcol < 0) throw ulrates::invalid_parameter_error("no such column: \"" + value_col + "\"");

    std::vector<double> times, values;
    times.reserve(table.rows.size());
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        times.push_back(std::stod(row.at(static_cast<size_t>(tcol))));
        values.push_back(std::abs(std::stod(row.at(static_cast<size_t>(vcol)))));
    }
    if (times.empty()) throw ulrates::fit_failure_error("input table has no data rows");

    ulrates::FitMode mode;
    if (mode_s == "tail_linear")
        mode = ulrates::FitMode::TailLinear;
    else if (mode_s == "envelope")
        mode = ulrates::FitMode::Envelope;
    else
        throw ulrates::invalid_parameter_error("mode must be \"tail_linear\" or \"envelope\"");

    if (std::isnan(t_start)) t_start = times.front();
    if (std::isnan(t_end)) t_end = times.back();

    ulrates::DecayFit fit = ulrates::fit_decay(times, values, mode, t_start, t_end);

    const json resolved{{"input", input},   {"value_col", value_col}, {"time_col", time_col},
                        {"mode", mode_s},   {"t_start", t_start},     {"t_end", t_end},
                        {"format", out.format}};
    Manifest man("fit", resolved);
    write_json_artifact(man, out, "fit", fit_json(fit));
    man.write(out.dir);
    std::printf("rate = %s\n", format_double(fit.rate).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::string& config_path, const Out& out) {
    if (config_path.empty())
        throw ulrates::invalid_parameter_error("report requires --config");
    static const std::set<std::string> keys{"potential", "gamma_values", "m_values", "c0"};
    json cfg = load_config_file(config_path, keys);
    if (!cfg.contains("potential"))
        throw ulrates::invalid_parameter_error("missing config key: \"potential\"");
    if (!cfg.contains("gamma_values") || !cfg.at("gamma_values").is_array() ||
        cfg.at("gamma_values").empty())
        throw ulrates::invalid_parameter_error("gamma_values must be a non-empty array");

    const double c0 = cfg.value("c0", 1.0);
    std::vector<double> gammas;
    for (const auto& g : cfg.at("gamma_values")) gammas.push_back(g.get<double>());

    const json& pj = cfg.at("potential");
    const std::string kind = pj.is_object() ? pj.value("kind", "") : "";
    const bool quadratic = (kind == "quadratic");

    std::vector<double> ms;
    if (quadratic) {
        if (cfg.contains("m_values")) {
            if (!cfg.at("m_values").is_array() || cfg.at("m_values").empty())
                throw ulrates::invalid_parameter_error("m_values must be a non-empty array");
            for (const auto& m : cfg.at("m_values")) ms.push_back(m.get<double>());
        } else if (pj.contains("m")) {
            ms.push_back(pj.at("m").get<double>());
        } else {
            throw ulrates::invalid_parameter_error("quadratic report needs m_values or potential.m");
        }
    } else {
        if (cfg.contains("m_values"))
            throw ulrates::invalid_parameter_error("m_values is only meaningful for the quadratic potential");
        // The convexity constant is measured, not prescribed.
        ulrates::PotentialSpec spec = ulrates::potential_from_json(pj.dump());
        ulrates::PoincareEstimate est = ulrates::poincare_fd(spec, -3.0, 3.0, 2048);
        ms.push_back(est.m_hat);
    }

    ulrates::PotentialSpec proto = ulrates::potential_from_json(pj.dump());

    std::vector<std::string> header{"m", "gamma", "R", "c0", "lambda_main", "lambda_dms"};
    if (quadratic) header.push_back("lambda_exact");
    CsvTable table(header);

    for (double m : ms) {
        ulrates::PotentialSpec spec = proto;
        if (quadratic) spec = ulrates::make_isotropic_quadratic(m, proto.dimension);
        double R = 0.0;
        std::string R_cell;
        try {
            R = ulrates::select_R(spec).value;
            R_cell = format_double(R);
        } catch (const ulrates::error& e) {
            R_cell = std::string("ERROR(") + e.kind() + ")";
        }
        const double K = spec.hessian_lower_K.value_or(quadratic ? m : 0.0);
        for (double gamma : gammas) {
            std::vector<std::string> row{format_double(m), format_double(gamma), R_cell,
                                         format_double(c0)};
            try {
                row.push_back(format_double(eval_main_rate(m, gamma, R, c0).lambda));
            } catch (const ulrates::error& e) {
                row.push_back(std::string("ERROR(") + e.kind() + ")");
            }
            try {
                row.push_back(format_double(
                    ulrates::dms_optimize(gamma, m, ulrates::r_ham_bound(K)).lambda_star));
            } catch (const ulrates::error& e) {
                row.push_back(std::string("ERROR(") + e.kind() + ")");
            }
            if (quadratic) {
                try {
                    row.push_back(format_double(ulrates::quadratic_gap(m, gamma)));
                } catch (const ulrates::error& e) {
                    row.push_back(std::string("ERROR(") + e.kind() + ")");
                }
            }
            table.add_row(row);
        }
    }

    json resolved = cfg;
    resolved["format"] = out.format;
    Manifest man("report", resolved);
    write_csv_artifact(man, out, "report", table);
    man.write(out.dir);
    std::printf("wrote %zu report rows\n", ms.size() * gammas.size());
    return 0;
}

void print_error_json(const std::string& kind, const std::string& message) {
    const json err{{"error", {{"kind", kind}, {"message", message}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"rate toolkit for kinetic Langevin samplers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ulrates::kVersion));

    // Shared options are duplicated per subcommand so each one can carry its
    // own config-file key set.
    struct Common {
        std::string config;
        std::string outdir;
        std::string format = "both";
        Out out() const { return Out{resolve_outdir(outdir), format}; }
    };

    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config, "JSON config file (flags override it)");
        sub->add_option("--output-dir", c.outdir,
                        "directory for artifacts (default: $ULRATES_OUTPUT_DIR or .)");
        sub->add_option("--format", c.format, "artifact kinds to write: json, csv, or both")
            ->check(CLI::IsMember({"json", "csv", "both"}));
    };

    // rate
    Common rate_c;
    double r_m = 1.0, r_gamma = 1.0, r_R = 0.0, r_c0 = 1.0;
    auto* rate_sub = app.add_subcommand("rate", "contraction rate at one parameter point");
    add_common(rate_sub, rate_c);
    auto* r_om = rate_sub->add_option("--m", r_m, "convexity constant");
    auto* r_og = rate_sub->add_option("--gamma", r_gamma, "friction");
    auto* r_oR = rate_sub->add_option("--R", r_R, "regime constant");
    auto* r_oc = rate_sub->add_option("--c0", r_c0, "comparison constant");

    // sweep-gamma
    Common sw_c;
    double s_m = 1.0, s_R = 0.0, s_c0 = 1.0, s_lo = 0.01, s_hi = 100.0;
    int s_num = 200;
    std::string s_spacing = "log";
    auto* sweep_sub = app.add_subcommand("sweep-gamma", "rate as a function of friction");
    add_common(sweep_sub, sw_c);
    auto* s_om = sweep_sub->add_option("--m", s_m, "convexity constant");
    auto* s_oR = sweep_sub->add_option("--R", s_R, "regime constant");
    auto* s_oc = sweep_sub->add_option("--c0", s_c0, "comparison constant");
    auto* s_olo = sweep_sub->add_option("--gamma-min", s_lo, "smallest friction");
    auto* s_ohi = sweep_sub->add_option("--gamma-max", s_hi, "largest friction");
    auto* s_on = sweep_sub->add_option("--num", s_num, "number of grid points");
    auto* s_osp = sweep_sub->add_option("--spacing", s_spacing, "log or linear");

    // dms
    Common dms_c;
    double d_gamma = 1.0, d_m = 1.0, d_K = 0.0, d_eps = 0.0;
    auto* dms_sub = app.add_subcommand("dms", "twisted-norm rate (optimized unless --epsilon)");
    add_common(dms_sub, dms_c);
    auto* d_og = dms_sub->add_option("--gamma", d_gamma, "friction");
    auto* d_om = dms_sub->add_option("--m", d_m, "convexity constant");
    auto* d_oK = dms_sub->add_option("--K", d_K, "Hessian upper bound (caps the Hamiltonian norm)");
    auto* d_oe = dms_sub->add_option("--epsilon", d_eps, "fix the twist instead of optimizing");

    // spectrum
    Common sp_c;
    double p_m = 1.0, p_gamma = 1.0;
    int p_nmax = 10;
    auto* spec_sub = app.add_subcommand("spectrum", "closed-form quadratic spectrum");
    add_common(spec_sub, sp_c);
    auto* p_om = spec_sub->add_option("--m", p_m, "curvature");
    auto* p_og = spec_sub->add_option("--gamma", p_gamma, "friction");
    auto* p_on = spec_sub->add_option("--nmax", p_nmax, "max mode index per factor");

    // galerkin
    Common ga_c;
    double g_m = 1.0, g_gamma = 1.0;
    int g_N = 40;
    auto* gal_sub = app.add_subcommand("galerkin", "Hermite-truncated generator spectrum");
    add_common(gal_sub, ga_c);
    auto* g_om = gal_sub->add_option("--m", g_m, "curvature");
    auto* g_og = gal_sub->add_option("--gamma", g_gamma, "friction");
    auto* g_oN = gal_sub->add_option("--N", g_N, "truncation order per factor");

    // poincare
    Common po_c;
    std::string q_pot = "quadratic";
    double q_m = 1.0;
    double q_lo = std::numeric_limits<double>::quiet_NaN();
    double q_hi = std::numeric_limits<double>::quiet_NaN();
    int q_n = 2048;
    auto* poi_sub = app.add_subcommand("poincare", "spectral-gap estimate of the overdamped generator");
    add_common(poi_sub, po_c);
    auto* q_op = poi_sub->add_option("--potential", q_pot, "quadratic or double_well");
    auto* q_om = poi_sub->add_option("--m", q_m, "curvature (quadratic only)");
    auto* q_olo = poi_sub->add_option("--xmin", q_lo, "left end of the grid");
    auto* q_ohi = poi_sub->add_option("--xmax", q_hi, "right end of the grid");
    auto* q_on = poi_sub->add_option("--n", q_n, "number of grid points");

    // simulate
    Common si_c;
    int si_workers = 1;
    auto* sim_sub = app.add_subcommand("simulate", "ensemble moments from the SDE (config-driven)");
    add_common(sim_sub, si_c);
    auto* si_ow = sim_sub->add_option("--workers", si_workers, "worker threads (does not change output)");

    // fit
    Common fi_c;
    std::string f_input, f_vcol, f_tcol = "t", f_mode = "tail_linear";
    double f_ts = std::numeric_limits<double>::quiet_NaN();
    double f_te = std::numeric_limits<double>::quiet_NaN();
    auto* fit_sub = app.add_subcommand("fit", "decay-rate fit from a CSV time series");
    add_common(fit_sub, fi_c);
    auto* f_oin = fit_sub->add_option("--input", f_input, "input CSV file");
    auto* f_oval = fit_sub->add_option("--value-col", f_vcol, "column with the decaying quantity");
    auto* f_otc = fit_sub->add_option("--time-col", f_tcol, "time column (default t)");
    auto* f_omode = fit_sub->add_option("--mode", f_mode, "tail_linear or envelope");
    auto* f_ots = fit_sub->add_option("--t-start", f_ts, "fit window start");
    auto* f_ote = fit_sub->add_option("--t-end", f_te, "fit window end");

    // report
    Common re_c;
    auto* rep_sub = app.add_subcommand("report", "rate comparison table over a parameter grid");
    add_common(rep_sub, re_c);

    std::vector<std::string> argv_copy = args;
    try {
        // CLI11 wants argv reversed and consumes it in place.
        std::reverse(argv_copy.begin(), argv_copy.end());
        app.parse(argv_copy);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json("usage", e.what());
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (rate_sub->parsed())
            return cmd_rate(rate_c.config, rate_c.out(), r_m, r_gamma, r_R, r_c0,
                            r_om, r_og, r_oR, r_oc);
        if (sweep_sub->parsed())
            return cmd_sweep_gamma(sw_c.config, sw_c.out(), s_m, s_R, s_c0, s_lo, s_hi,
                                   s_num, s_spacing, s_om, s_oR, s_oc, s_olo, s_ohi,
                                   s_on, s_osp);
        if (dms_sub->parsed())
            return cmd_dms(dms_c.config, dms_c.out(), d_gamma, d_m, d_K, d_eps,
                           d_oe->count() > 0, d_og, d_om, d_oK, d_oe);
        if (spec_sub->parsed())
            return cmd_spectrum(sp_c.config, sp_c.out(), p_m, p_gamma, p_nmax,
                                p_om, p_og, p_on);
        if (gal_sub->parsed())
            return cmd_galerkin(ga_c.config, ga_c.out(), g_m, g_gamma, g_N,
                                g_om, g_og, g_oN);
        if (poi_sub->parsed())
            return cmd_poincare(po_c.config, po_c.out(), q_pot, q_m, q_lo, q_hi, q_n,
                                q_op, q_om, q_olo, q_ohi, q_on);
        if (sim_sub->parsed()) return cmd_simulate(si_c.config, si_c.out(), si_workers, si_ow);
        if (fit_sub->parsed())
            return cmd_fit(fi_c.config, fi_c.out(), f_input, f_vcol, f_tcol, f_mode,
                           f_ts, f_te, f_oin, f_oval, f_otc, f_omode, f_ots, f_ote);
        if (rep_sub->parsed()) return cmd_report(re_c.config, re_c.out());
    } catch (const ulrates::error& e) {
        print_error_json(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error_json("internal", e.what());
        return 70;
    }
    return 0;
}

}  // namespace ulrates_cli
