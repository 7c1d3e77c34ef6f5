#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "penspline/quadrature.hpp"
#include "penspline/simulate.hpp"

using namespace penspline;

namespace {

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max(std::abs((i + 1) / n - f), std::abs(i / n - f)));
    }
    return d;
}

}  // namespace

TEST_CASE("identical specs give bitwise-identical datasets") {
    for (ModelKind kind : {ModelKind::Gaussian, ModelKind::LogDensity, ModelKind::Hazard,
                           ModelKind::Quantile, ModelKind::Spectral}) {
        DGPSpec dgp;
        dgp.model = kind;
        dgp.truth = TruthFunction::smooth_sin(0.7);
        dgp.n = kind == ModelKind::Spectral ? 128 : 200;
        dgp.ar = {0.5};
        dgp.seed = 99;
        const Dataset a = generate(dgp);
        const Dataset b = generate(dgp);
        CHECK(a == b);
    }
}

TEST_CASE("noiseless gaussian returns the truth exactly") {
    DGPSpec dgp;
    dgp.truth = TruthFunction::power_kink(2.5, 0.5);
    dgp.n = 100;
    dgp.sigma = 0.0;
    dgp.seed = 1;
    const auto d = std::get<XYData>(generate(dgp));
    for (size_t i = 0; i < d.x.size(); ++i) CHECK(d.y[i] == dgp.truth(d.x[i]));
}

TEST_CASE("flat log-density samples uniformly") {
    DGPSpec dgp;
    dgp.model = ModelKind::LogDensity;
    dgp.truth = TruthFunction::smooth_sin(0.0);  // identically zero
    dgp.n = 10000;
    dgp.seed = 2;
    const auto d = std::get<PointData>(generate(dgp));
    const double ks = ks_statistic(d.x, [](double x) { return x; });
    CHECK(ks < 1.6276 / std::sqrt(10000.0));
}

TEST_CASE("tilted design matches its cdf") {
    DGPSpec dgp;
    dgp.truth = TruthFunction::smooth_sin();
    dgp.design = DesignDensity::Tilted;
    dgp.n = 10000;
    dgp.seed = 3;
    const auto d = std::get<XYData>(generate(dgp));
    const double ks =
        ks_statistic(d.x, [](double x) { return (x + 0.25 * x * x) / 1.25; });
    CHECK(ks < 1.6276 / std::sqrt(10000.0));
}

TEST_CASE("binned conditional means match the link") {
    const int n = 100000, bins = 10;
    for (ModelKind kind : {ModelKind::Gaussian, ModelKind::Logistic, ModelKind::Poisson}) {
        DGPSpec dgp;
        dgp.model = kind;
        dgp.truth = TruthFunction::smooth_sin(0.8);
        dgp.n = n;
        dgp.sigma = 0.7;
        dgp.seed = 4;
        const auto d = std::get<XYData>(generate(dgp));
        auto mean_fn = [&](double eta) {
            if (kind == ModelKind::Gaussian) return eta;
            if (kind == ModelKind::Logistic) return 1.0 / (1.0 + std::exp(-eta));
            return std::exp(eta);
        };
        std::vector<double> sum(bins, 0), sumsq(bins, 0), ref(bins, 0);
        std::vector<int> count(bins, 0);
        for (int i = 0; i < n; ++i) {
            const int b = std::min(bins - 1, static_cast<int>(d.x[i] * bins));
            sum[b] += d.y[i];
            sumsq[b] += d.y[i] * d.y[i];
            ref[b] += mean_fn(dgp.truth(d.x[i]));
            ++count[b];
        }
        for (int b = 0; b < bins; ++b) {
            const double mean = sum[b] / count[b];
            const double var = sumsq[b] / count[b] - mean * mean;
            const double se = std::sqrt(std::max(var, 1e-12) / count[b]);
            CHECK(std::abs(mean - ref[b] / count[b]) <= 3.5 * se + 1e-3);
        }
    }
}

TEST_CASE("quantile noise is centered at its level") {
    for (QuantileNoise noise : {QuantileNoise::Gaussian, QuantileNoise::T3}) {
        for (double tau : {0.25, 0.5, 0.9}) {
            DGPSpec dgp;
            dgp.model = ModelKind::Quantile;
            dgp.truth = TruthFunction::smooth_sin(0.0);  // isolate the noise
            dgp.n = 1000000;
            dgp.tau = tau;
            dgp.qnoise = noise;
            dgp.seed = 5;
            auto d = std::get<XYData>(generate(dgp));
            std::nth_element(d.y.begin(), d.y.begin() + static_cast<long>(tau * d.y.size()),
                             d.y.end());
            const double emp = d.y[static_cast<long>(tau * d.y.size())];
            CHECK(std::abs(emp) < 5e-3);
        }
    }
}

TEST_CASE("hazard censoring stays informative at the shipped default") {
    DGPSpec dgp;
    dgp.model = ModelKind::Hazard;
    dgp.truth = TruthFunction::smooth_sin(0.8);
    dgp.n = 10000;
    dgp.seed = 6;
    const auto d = std::get<SurvivalData>(generate(dgp));
    double events = 0;
    for (auto e : d.event) events += e;
    const double rate = 1.0 - events / d.event.size();  // censoring fraction
    CHECK(rate > 0.1);
    CHECK(rate < 0.9);
}

TEST_CASE("AR(1) periodogram concentrates on the spectral density") {
    const std::vector<double> phi = {0.5};
    auto truth = ar_log_spectral_density(phi, 1.0);
    const int T = 1024, reps = 200;
    std::vector<double> acc;
    for (int r = 0; r < reps; ++r) {
        DGPSpec dgp;
        dgp.model = ModelKind::Spectral;
        dgp.ar = phi;
        dgp.n = T;
        dgp.seed = 100 + r;
        const auto per = std::get<PeriodogramData>(generate(dgp));
        if (acc.empty()) acc.assign(per.ordinate.size(), 0.0);
        for (size_t k = 0; k < per.ordinate.size(); ++k) acc[k] += per.ordinate[k] / reps;
    }
    // compare mean periodogram with f away from the boundary bins
    int checked = 0;
    for (size_t k = 8; k + 8 < acc.size(); k += 16) {
        const double lambda = 2.0 * M_PI * k / T;
        const double f = std::exp(truth(lambda));
        CHECK(acc[k] == doctest::Approx(f).epsilon(0.05 + 3.0 * std::sqrt(1.0 / reps)));
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("kink truths sit between J_p finite and J_{p+1} infinite") {
    TruthFunction t = TruthFunction::power_kink(2.5, 0.5);
    CHECK(truth_smoothness(t) == 2);
    CHECK(truth_eval(t, 0.5) == doctest::Approx(0.0));
    CHECK(truth_eval(TruthFunction::smooth_sin(), 0.25) == doctest::Approx(1.0));

    // quadrature divergence scan: refine dyadically toward the kink
    auto deriv_sq = [&](double x, int order) {
        const double u = std::abs(x - 0.5);
        double c = 1.0;
        for (int j = 0; j < order; ++j) c *= (2.5 - j);
        const double v = c * std::pow(u, 2.5 - order);
        return v * v;
    };
    double j2_prev = 0.0, j3_prev = 0.0;
    double j2_growth = 0.0, j3_growth = 0.0;
    for (int level = 2; level <= 10; ++level) {
        const double gap = std::pow(2.0, -level);
        auto j_of = [&](int order) {
            return 2.0 * adaptive_integrate([&](double x) { return deriv_sq(x, order); },
                                            0.5 + gap, 1.0);
        };
        const double j2 = j_of(2), j3 = j_of(3);
        if (level > 2) {
            j2_growth = j2 - j2_prev;
            j3_growth = j3 / j3_prev;
        }
        j2_prev = j2;
        j3_prev = j3;
    }
    CHECK(j2_growth < 1e-2);  // J_2 converges as the gap closes
    CHECK(j3_growth > 1.5);   // J_3 keeps doubling: divergent
}

TEST_CASE("invalid parameters are rejected") {
    DGPSpec dgp;
    dgp.truth = TruthFunction::smooth_sin();
    dgp.n = 10;
    dgp.sigma = -1.0;
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);

    dgp.sigma = 1.0;
    dgp.n = 0;
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);

    dgp.n = 16;
    dgp.model = ModelKind::Spectral;
    dgp.ar = {1.05};
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);
    dgp.ar = {0.3, 0.8};  // outside the AR(2) stationarity triangle
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);

    dgp.model = ModelKind::Quantile;
    dgp.tau = 1.2;
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);

    dgp.model = ModelKind::Hazard;
    dgp.censor_bound = 0.0;
    CHECK_THROWS_AS(generate(dgp), std::invalid_argument);

    CHECK_THROWS_AS(TruthFunction::power_kink(0.3, 0.5), std::invalid_argument);
}

TEST_CASE("quantile helpers match reference values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(t3_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t3_quantile(0.975) == doctest::Approx(3.182446305284263).epsilon(1e-8));
}

TEST_CASE("density sampler inverts its own cdf") {
    DensitySampler sampler([](double x) { return std::sin(2.0 * M_PI * x); }, 0.0, 1.0);
    for (double u : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        const double x = sampler.quantile(u);
        CHECK(sampler.cdf(x) == doctest::Approx(u).epsilon(1e-8));
    }
}
