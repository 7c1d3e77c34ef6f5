#include "penspline/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "penspline/quadrature.hpp"

namespace penspline {

using nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRegimeTol = 1e-9;
}  // namespace

int ScenarioSpec::knots_for(int n) const {
    const double len = dgp.domain_hi - dgp.domain_lo;
    const double delta = knot_rule.at(n);
    return static_cast<int>(std::lround(len / delta)) - 1;
}

void ScenarioSpec::validate() const {
    if (q < 1 || q > m) throw ConfigError(0, "scenario requires 1 <= q <= m");
    if (p() < 1) throw ConfigError(0, "scenario requires p >= 1");
    if (n_grid.empty()) throw ConfigError(0, "empty n_grid");
    for (size_t i = 0; i + 1 < n_grid.size(); ++i)
        if (n_grid[i] >= n_grid[i + 1]) throw ConfigError(0, "n_grid must be increasing");
    if (replications < 1) throw ConfigError(0, "replications must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError(0, "tolerance must be positive");
    if (!(knot_rule.c > 0.0) || !(lambda_rule.c >= 0.0))
        throw ConfigError(0, "rule constants must be positive");
    if (knots_for(n_grid.front()) < 1)
        throw ConfigError(0, "knot rule gives no interior knots at the smallest n");

    const int pp = p_prime();
    const double a = knot_rule.exponent, b = lambda_rule.exponent;
    auto at_least = [&](double lhs, double rhs) { return lhs >= rhs - kRegimeTol; };

    // family: relation between q and p'
    if (case_label == "I.1" || case_label == "I.2" || case_label == "I.3") {
        if (!(q < pp)) throw ConfigError(0, "case I requires q < p'");
    } else if (case_label == "II.1" || case_label == "II.2") {
        if (!(q == p() && q == pp)) throw ConfigError(0, "case II requires q = p' = p");
    } else if (case_label == "III.1" || case_label == "III.2") {
        if (!(q > p())) throw ConfigError(0, "case III requires q > p");
    } else {
        throw ConfigError(0, "unknown case label: " + case_label);
    }

    // regime: lambda_n against delta_n^{2p'} / delta_n^{2q} along the grid,
    // which for power rules reduces to exponent comparisons
    if (case_label == "I.1" && !at_least(b, 2.0 * pp * a))
        throw ConfigError(0, "case I.1 requires lambda_n <~ delta_n^{2p'}");
    if (case_label == "I.2" && !(at_least(b, 2.0 * q * a) && at_least(2.0 * pp * a, b)))
        throw ConfigError(0, "case I.2 requires delta_n^{2p'} <~ lambda_n <~ delta_n^{2q}");
    if (case_label == "I.3" && !at_least(2.0 * q * a, b))
        throw ConfigError(0, "case I.3 requires lambda_n >~ delta_n^{2q}");
    if (case_label == "II.1" && !at_least(b, 2.0 * p() * a))
        throw ConfigError(0, "case II.1 requires lambda_n <~ delta_n^{2p}");
    if (case_label == "II.2" && !at_least(2.0 * p() * a, b))
        throw ConfigError(0, "case II.2 requires lambda_n >~ delta_n^{2p}");
    if (case_label == "III.1" && !at_least(b, 2.0 * q * a))
        throw ConfigError(0, "case III.1 requires lambda_n <~ delta_n^{2q}");
    if (case_label == "III.2" && !at_least(2.0 * q * a, b))
        throw ConfigError(0, "case III.2 requires lambda_n >~ delta_n^{2q}");
}

double expected_exponent(const ScenarioSpec& spec) {
    spec.validate();
    const double pp = spec.p_prime(), pq = spec.q, pv = spec.p();
    if (spec.case_label == "I.1" || spec.case_label == "I.2") return 2.0 * pp / (2.0 * pp + 1.0);
    if (spec.case_label == "I.3") return 2.0 * pq / (2.0 * pq + 1.0);
    return 2.0 * pv / (2.0 * pv + 1.0);
}

void ols_slope(const std::vector<double>& x, const std::vector<double>& y, double& slope,
               double& se) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    slope = sxy / sxx;
    se = 0.0;
    if (n > 2) {
        const double intercept = my - slope * mx;
        double rss = 0;
        for (size_t i = 0; i < n; ++i) {
            const double r = y[i] - intercept - slope * x[i];
            rss += r * r;
        }
        se = std::sqrt(rss / (n - 2) / sxx);
    }
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct ScenarioContext {
    std::function<double(double)> truth;  // identified truth for the error metric
    std::vector<BasisSpec> bases;
    std::vector<PenaltyOperator> penalties;
    std::vector<ConstraintSpec> constraints;
    bool constrained = false;
};

ScenarioContext make_context(const ScenarioSpec& spec) {
    ScenarioContext ctx;
    const double lo = spec.dgp.domain_lo, hi = spec.dgp.domain_hi;

    if (spec.dgp.model == ModelKind::Spectral) {
        ctx.truth = ar_log_spectral_density(spec.dgp.ar, spec.dgp.ar_sigma);
    } else if (spec.dgp.model == ModelKind::LogDensity) {
        // the identified truth integrates to zero
        const TruthFunction t = spec.dgp.truth;
        const double mean =
            adaptive_integrate([&t](double x) { return t(x); }, lo, hi) / (hi - lo);
        ctx.truth = [t, mean](double x) { return t(x) - mean; };
    } else {
        const TruthFunction t = spec.dgp.truth;
        ctx.truth = [t](double x) { return t(x); };
    }

    for (int n : spec.n_grid) {
        BasisSpec basis(make_knots(lo, hi, spec.knots_for(n)), spec.m);
        ctx.penalties.push_back(penalty_gram(basis, spec.q));
        if (spec.dgp.model == ModelKind::LogDensity)
            ctx.constraints.push_back(zero_integral_constraint(basis));
        else if (spec.dgp.model == ModelKind::Spectral)
            ctx.constraints.push_back(spectral_boundary_constraints(basis));
        ctx.bases.push_back(std::move(basis));
    }
    ctx.constrained =
        spec.dgp.model == ModelKind::LogDensity || spec.dgp.model == ModelKind::Spectral;
    return ctx;
}

}  // namespace

RateReport run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioContext ctx = make_context(spec);
    const int R = spec.replications;
    const int num_n = static_cast<int>(spec.n_grid.size());

    std::vector<std::vector<double>> mse(num_n, std::vector<double>(R, 0.0));
    std::vector<std::vector<double>> pen(num_n, std::vector<double>(R, 0.0));
    std::vector<std::vector<std::uint8_t>> bad(num_n, std::vector<std::uint8_t>(R, 0));
    std::mutex diag_mu;
    std::string first_diag;

    parallel_for(num_n * R, spec.workers, [&](int job) {
        const int ni = job / R, r = job % R;
        const int n = spec.n_grid[ni];
        DGPSpec dgp = spec.dgp;
        dgp.n = n;
        dgp.seed = spec.seed + static_cast<std::uint64_t>(r);
        const Dataset data = generate(dgp);
        const ModelSpec model = model_for(dgp);
        const double lambda = spec.lambda_for(n);
        const ConstraintSpec* cons = ctx.constrained ? &ctx.constraints[ni] : nullptr;
        const PenalizedFit fit =
            fit_penalized(model, data, ctx.bases[ni], ctx.penalties[ni], lambda, cons);
        if (!fit.converged) {
            bad[ni][r] = 1;
            std::lock_guard<std::mutex> lock(diag_mu);
            if (first_diag.empty())
                first_diag = "n=" + std::to_string(n) + " rep=" + std::to_string(r) + ": " +
                             (fit.diagnostic.empty() ? "not converged" : fit.diagnostic);
        }
        mse[ni][r] = l2_error(fit, ctx.bases[ni], ctx.truth);
        pen[ni][r] = lambda * penalty_value(fit, ctx.penalties[ni]);
    });

    int total_bad = 0;
    for (const auto& row : bad)
        for (auto b : row) total_bad += b;
    if (total_bad > 0.01 * num_n * R) {
        std::ostringstream msg;
        msg << "run_scenario: " << total_bad << " of " << num_n * R
            << " fits failed to converge (first: " << first_diag << ")";
        throw std::runtime_error(msg.str());
    }

    RateReport rep;
    rep.case_label = spec.case_label;
    rep.model = model_kind_name(spec.dgp.model);
    rep.m = spec.m;
    rep.q = spec.q;
    rep.p = spec.p();
    rep.seed = spec.seed;
    rep.expected = expected_exponent(spec);
    rep.tolerance = spec.tolerance;

    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
        const size_t n = v.size();
        mean = 0;
        for (double x : v) mean += x;
        mean /= n;
        se = 0;
        if (n > 1) {
            double ss = 0;
            for (double x : v) ss += (x - mean) * (x - mean);
            se = std::sqrt(ss / (n - 1) / n);
        }
    };

    std::vector<double> logn, logmse;
    bool log_ok = true;
    for (int ni = 0; ni < num_n; ++ni) {
        RatePoint pt;
        pt.n = spec.n_grid[ni];
        pt.k = spec.knots_for(pt.n);
        pt.lambda = spec.lambda_for(pt.n);
        mean_se(mse[ni], pt.mse_mean, pt.mse_se);
        mean_se(pen[ni], pt.pen_mean, pt.pen_se);
        for (auto b : bad[ni]) pt.nonconverged += b;
        rep.points.push_back(pt);
        if (pt.mse_mean > 0.0) {
            logn.push_back(std::log(static_cast<double>(pt.n)));
            logmse.push_back(std::log(pt.mse_mean));
        } else {
            log_ok = false;
        }
    }

    for (size_t i = 0; i + 1 < rep.points.size(); ++i)
        if (rep.points[i + 1].mse_mean >= rep.points[i].mse_mean) {
            rep.warnings.push_back("mean error not strictly decreasing along n_grid");
            break;
        }

    rep.pass_undefined = num_n < 3 || R < 2 || !log_ok;
    if (logn.size() >= 2) ols_slope(logn, logmse, rep.slope, rep.slope_se);
    if (!rep.pass_undefined)
        rep.pass = std::abs(rep.slope - (-rep.expected)) <= rep.tolerance;

    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

DecompositionReport decomposition_report(const ScenarioSpec& spec) {
    spec.validate();
    if (spec.dgp.model != ModelKind::Gaussian)
        throw std::invalid_argument("decomposition_report: Gaussian scenarios only");
    const ScenarioContext ctx = make_context(spec);
    const Weight design =
        design_weight(spec.dgp.design, spec.dgp.domain_lo, spec.dgp.domain_hi);
    const int R = spec.replications;
    const int num_n = static_cast<int>(spec.n_grid.size());

    DecompositionReport out;
    out.rows.resize(num_n);
    std::vector<PenalizedFit> population(num_n);
    for (int ni = 0; ni < num_n; ++ni) {
        population[ni] = population_fit_gaussian(ctx.truth, ctx.bases[ni], ctx.penalties[ni],
                                                 spec.lambda_for(spec.n_grid[ni]), design);
        out.rows[ni].n = spec.n_grid[ni];
        out.rows[ni].approximation =
            l2_error(population[ni], ctx.bases[ni], ctx.truth);
    }

    std::vector<std::vector<double>> est(num_n, std::vector<double>(R, 0.0));
    std::vector<std::vector<double>> tot(num_n, std::vector<double>(R, 0.0));
    parallel_for(num_n * R, spec.workers, [&](int job) {
        const int ni = job / R, r = job % R;
        DGPSpec dgp = spec.dgp;
        dgp.n = spec.n_grid[ni];
        dgp.seed = spec.seed + static_cast<std::uint64_t>(r);
        const Dataset data = generate(dgp);
        const PenalizedFit fit = fit_penalized(Gaussian{}, data, ctx.bases[ni], ctx.penalties[ni],
                                               spec.lambda_for(dgp.n));
        const SplineFunction pop = population[ni].spline(ctx.bases[ni]);
        est[ni][r] = l2_error(fit, ctx.bases[ni], [&pop](double x) { return pop.value(x); });
        tot[ni][r] = l2_error(fit, ctx.bases[ni], ctx.truth);
    });

    for (int ni = 0; ni < num_n; ++ni) {
        double e = 0, t = 0;
        for (int r = 0; r < R; ++r) {
            e += est[ni][r];
            t += tot[ni][r];
        }
        out.rows[ni].estimation = e / R;
        out.rows[ni].total = t / R;
    }
    return out;
}

std::string RateReport::to_json(bool include_wall) const {
    json j;
    j["schema_version"] = schema_version;
    j["case"] = case_label;
    j["model"] = model;
    j["m"] = m;
    j["q"] = q;
    j["p"] = p;
    j["seed"] = seed;
    j["expected"] = expected;
    j["tolerance"] = tolerance;
    j["slope"] = slope;
    j["slope_se"] = slope_se;
    j["pass"] = pass;
    j["pass_undefined"] = pass_undefined;
    j["warnings"] = warnings;
    if (include_wall) j["wall_ms"] = wall_ms;
    j["points"] = json::array();
    for (const auto& pt : points) {
        json p;
        p["n"] = pt.n;
        p["k"] = pt.k;
        p["lambda"] = pt.lambda;
        p["mse_mean"] = pt.mse_mean;
        p["mse_se"] = pt.mse_se;
        p["pen_mean"] = pt.pen_mean;
        p["pen_se"] = pt.pen_se;
        p["nonconverged"] = pt.nonconverged;
        j["points"].push_back(p);
    }
    return j.dump(2);
}

RateReport RateReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    RateReport rep;
    rep.schema_version = j.at("schema_version").get<int>();
    rep.case_label = j.at("case").get<std::string>();
    rep.model = j.at("model").get<std::string>();
    rep.m = j.at("m").get<int>();
    rep.q = j.at("q").get<int>();
    rep.p = j.at("p").get<int>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    rep.expected = j.at("expected").get<double>();
    rep.tolerance = j.at("tolerance").get<double>();
    rep.slope = j.at("slope").get<double>();
    rep.slope_se = j.at("slope_se").get<double>();
    rep.pass = j.at("pass").get<bool>();
    rep.pass_undefined = j.at("pass_undefined").get<bool>();
    if (j.contains("warnings")) rep.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("wall_ms")) rep.wall_ms = j.at("wall_ms").get<double>();
    for (const auto& p : j.at("points")) {
        RatePoint pt;
        pt.n = p.at("n").get<int>();
        pt.k = p.at("k").get<int>();
        pt.lambda = p.at("lambda").get<double>();
        pt.mse_mean = p.at("mse_mean").get<double>();
        pt.mse_se = p.at("mse_se").get<double>();
        pt.pen_mean = p.at("pen_mean").get<double>();
        pt.pen_se = p.at("pen_se").get<double>();
        pt.nonconverged = p.at("nonconverged").get<int>();
        rep.points.push_back(pt);
    }
    return rep;
}

std::string DecompositionReport::to_json() const {
    json j;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        json row;
        row["n"] = r.n;
        row["estimation"] = r.estimation;
        row["approximation"] = r.approximation;
        row["total"] = r.total;
        j["rows"].push_back(row);
    }
    return j.dump(2);
}

ScenarioSpec scenario_from_config(const Config& cfg) {
    ScenarioSpec spec;
    spec.case_label = cfg.get_string("case");
    spec.dgp = dgp_from_config(cfg);
    spec.m = static_cast<int>(cfg.get_int("m"));
    spec.q = static_cast<int>(cfg.get_int("q"));
    spec.knot_rule.c = cfg.get_double("knot_rule.c", 1.0);
    spec.knot_rule.exponent = cfg.get_double("knot_rule.exponent");
    spec.lambda_rule.c = cfg.get_double("lambda_rule.c", 1.0);
    spec.lambda_rule.exponent = cfg.get_double("lambda_rule.exponent");
    if (cfg.has("n_grid")) {
        spec.n_grid.clear();
        for (long n : cfg.get_ints("n_grid")) spec.n_grid.push_back(static_cast<int>(n));
    }
    spec.replications = static_cast<int>(cfg.get_int("replications", 100));
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    spec.tolerance = cfg.get_double("tolerance", 0.15);
    spec.workers = static_cast<int>(cfg.get_int("workers", 0));
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(cfg.line_of("case"), e.what());
    }
    return spec;
}

DGPSpec dgp_from_config(const Config& cfg) {
    DGPSpec dgp;
    dgp.model = model_kind_from_name(cfg.get_string("model"));

    const bool spectral = dgp.model == ModelKind::Spectral;
    dgp.domain_lo = cfg.get_double("domain_lo", 0.0);
    dgp.domain_hi = cfg.get_double("domain_hi", spectral ? kPi : 1.0);

    if (spectral) {
        dgp.ar = cfg.get_doubles("ar");
        dgp.ar_sigma = cfg.get_double("ar_sigma", 1.0);
        dgp.truth = TruthFunction::custom(ar_log_spectral_density(dgp.ar, dgp.ar_sigma),
                                          TruthFunction::kSmoothSentinel);
    } else {
        const std::string kind = cfg.get_string("truth", "smooth_sin");
        const double scale = cfg.get_double("truth.scale", 1.0);
        const double shift = cfg.get_double("truth.shift", 0.0);
        if (kind == "smooth_sin") {
            dgp.truth = TruthFunction::smooth_sin(scale, shift);
        } else if (kind == "power_kink") {
            dgp.truth = TruthFunction::power_kink(cfg.get_double("truth.s"),
                                                  cfg.get_double("truth.c"), scale, shift);
        } else {
            throw ConfigError(cfg.line_of("truth"), "unknown truth kind: " + kind);
        }
    }

    dgp.n = static_cast<int>(cfg.get_int("n", 0));
    dgp.sigma = cfg.get_double("sigma", 1.0);
    dgp.censor_bound = cfg.get_double("censor_bound", 2.0);
    dgp.tau = cfg.get_double("tau", 0.5);
    const std::string noise = cfg.get_string("noise", "gaussian");
    if (noise == "gaussian")
        dgp.qnoise = QuantileNoise::Gaussian;
    else if (noise == "t3")
        dgp.qnoise = QuantileNoise::T3;
    else
        throw ConfigError(cfg.line_of("noise"), "unknown quantile noise: " + noise);
    dgp.qnoise_scale = cfg.get_double("noise_scale", 1.0);
    const std::string design = cfg.get_string("design", "uniform");
    if (design == "uniform")
        dgp.design = DesignDensity::Uniform;
    else if (design == "tilted")
        dgp.design = DesignDensity::Tilted;
    else
        throw ConfigError(cfg.line_of("design"), "unknown design density: " + design);
    dgp.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    return dgp;
}

}  // namespace penspline
