#include "penspline/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "penspline/quadrature.hpp"

namespace penspline {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int Rng::poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: negative mean");
    if (mean > 500.0) throw std::invalid_argument("poisson: mean out of supported range");
    // inversion by sequential search
    const double l = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform();
    } while (p > l);
    return k - 1;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Newton polish with the exact cdf
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double t3_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("t3_quantile: p outside (0,1)");
    auto cdf = [](double t) {
        const double z = t / std::sqrt(3.0);
        return 0.5 + (std::atan(z) + z / (1.0 + z * z)) / kPi;
    };
    auto pdf = [](double t) {
        const double w = 1.0 + t * t / 3.0;
        return 2.0 / (kPi * std::sqrt(3.0) * w * w);
    };
    double lo = -1e8, hi = 1e8, x = normal_quantile(p);
    for (int it = 0; it < 200; ++it) {
        const double f = cdf(x) - p;
        if (std::abs(f) < 1e-14) break;
        if (f > 0)
            hi = x;
        else
            lo = x;
        const double step = f / std::max(pdf(x), 1e-300);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

double TruthFunction::operator()(double x) const {
    double v = 0.0;
    switch (kind) {
        case TruthKind::SmoothSin: v = std::sin(2.0 * kPi * x); break;
        case TruthKind::PowerKink: v = std::pow(std::abs(x - center), s); break;
        case TruthKind::SplineTruth: v = spline->value(x); break;
        case TruthKind::Custom: v = fn(x); break;
    }
    return scale * v + shift;
}

TruthFunction TruthFunction::smooth_sin(double scale, double shift) {
    TruthFunction t;
    t.kind = TruthKind::SmoothSin;
    t.scale = scale;
    t.shift = shift;
    t.declared_p = kSmoothSentinel;
    return t;
}

TruthFunction TruthFunction::power_kink(double s, double c, double scale, double shift) {
    if (!(s > 0.5)) throw std::invalid_argument("power_kink: exponent must exceed 1/2");
    TruthFunction t;
    t.kind = TruthKind::PowerKink;
    t.s = s;
    t.center = c;
    t.scale = scale;
    t.shift = shift;
    // J_p finite iff p < s + 1/2
    t.declared_p = static_cast<int>(std::ceil(s - 0.5));
    return t;
}

TruthFunction TruthFunction::spline_truth(SplineFunction f) {
    TruthFunction t;
    t.kind = TruthKind::SplineTruth;
    t.spline = std::make_shared<SplineFunction>(std::move(f));
    t.declared_p = t.spline->basis.degree();  // C^{m-1} pieces: J_m finite
    return t;
}

TruthFunction TruthFunction::custom(std::function<double(double)> f, int declared_p) {
    TruthFunction t;
    t.kind = TruthKind::Custom;
    t.fn = std::move(f);
    t.declared_p = declared_p;
    return t;
}

double truth_eval(const TruthFunction& t, double x) { return t(x); }
int truth_smoothness(const TruthFunction& t) { return t.declared_p; }

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gaussian: return "gaussian";
        case ModelKind::Logistic: return "logistic";
        case ModelKind::Poisson: return "poisson";
        case ModelKind::LogDensity: return "density";
        case ModelKind::Hazard: return "hazard";
        case ModelKind::Quantile: return "quantile";
        case ModelKind::Spectral: return "spectral";
    }
    throw std::logic_error("model_kind_name: unreachable");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "gaussian") return ModelKind::Gaussian;
    if (name == "logistic") return ModelKind::Logistic;
    if (name == "poisson") return ModelKind::Poisson;
    if (name == "density") return ModelKind::LogDensity;
    if (name == "hazard") return ModelKind::Hazard;
    if (name == "quantile") return ModelKind::Quantile;
    if (name == "spectral") return ModelKind::Spectral;
    throw std::invalid_argument("unknown model name: " + name);
}

Weight design_weight(DesignDensity design, double lo, double hi) {
    const double len = hi - lo;
    if (design == DesignDensity::Uniform)
        return Weight{[len](double) { return 1.0 / len; }, 0};
    // density proportional to 1 + u/2 in unit coordinates; normalizer 5/4
    return Weight{[lo, len](double x) {
                      const double u = (x - lo) / len;
                      return (1.0 + 0.5 * u) / (1.25 * len);
                  },
                  1};
}

namespace {

double draw_design(const DGPSpec& dgp, Rng& rng) {
    const double u = rng.uniform();
    if (dgp.design == DesignDensity::Uniform) return dgp.domain_lo + u * (dgp.domain_hi - dgp.domain_lo);
    // invert F(v) = (v + v^2/4) / 1.25 on [0,1]
    const double v = 2.0 * (std::sqrt(1.0 + 1.25 * u) - 1.0);
    return dgp.domain_lo + v * (dgp.domain_hi - dgp.domain_lo);
}

void check_stationary(const std::vector<double>& phi) {
    if (phi.empty() || phi.size() > 2)
        throw std::invalid_argument("AR order must be 1 or 2");
    if (phi.size() == 1) {
        if (std::abs(phi[0]) >= 1.0)
            throw std::invalid_argument("AR(1) coefficient not stationary");
        return;
    }
    const double p1 = phi[0], p2 = phi[1];
    if (!(std::abs(p2) < 1.0 && p1 + p2 < 1.0 && p2 - p1 < 1.0))
        throw std::invalid_argument("AR(2) coefficients not stationary");
}

}  // namespace

std::vector<double> simulate_ar(const std::vector<double>& phi, double sigma, int T, Rng& rng) {
    check_stationary(phi);
    if (!(sigma > 0.0)) throw std::invalid_argument("simulate_ar: sigma must be positive");
    if (T <= 0) throw std::invalid_argument("simulate_ar: nonpositive length");
    const int burn = 1024;
    const size_t p = phi.size();
    std::vector<double> x;
    x.reserve(burn + T);
    for (int t = 0; t < burn + T; ++t) {
        double v = sigma * rng.normal();
        for (size_t j = 0; j < p; ++j)
            if (t > static_cast<int>(j)) v += phi[j] * x[t - 1 - j];
        x.push_back(v);
    }
    return std::vector<double>(x.end() - T, x.end());
}

namespace {

void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace

PeriodogramData periodogram(const std::vector<double>& series) {
    const int T = static_cast<int>(series.size());
    if (T < 2) throw std::invalid_argument("periodogram: series too short");
    const int half = T / 2;
    PeriodogramData out;
    out.freq.resize(half + 1);
    out.ordinate.resize(half + 1);
    out.boundary.resize(half + 1);

    const bool pow2 = (T & (T - 1)) == 0;
    if (pow2) {
        std::vector<std::complex<double>> buf(series.begin(), series.end());
        fft_radix2(buf);
        for (int k = 0; k <= half; ++k)
            out.ordinate[k] = std::norm(buf[k]) / (2.0 * kPi * T);
    } else {
        for (int k = 0; k <= half; ++k) {
            std::complex<double> s(0.0, 0.0);
            const double w = -2.0 * kPi * k / T;
            for (int t = 0; t < T; ++t)
                s += series[t] * std::complex<double>(std::cos(w * t), std::sin(w * t));
            out.ordinate[k] = std::norm(s) / (2.0 * kPi * T);
        }
    }
    for (int k = 0; k <= half; ++k) {
        out.freq[k] = 2.0 * kPi * k / T;
        out.boundary[k] = (k == 0 || (T % 2 == 0 && k == half)) ? 1 : 0;
    }
    return out;
}

std::function<double(double)> ar_log_spectral_density(std::vector<double> phi, double sigma) {
    check_stationary(phi);
    return [phi = std::move(phi), sigma](double l) {
        double re = 1.0, im = 0.0;
        for (size_t j = 0; j < phi.size(); ++j) {
            re -= phi[j] * std::cos((j + 1) * l);
            im += phi[j] * std::sin((j + 1) * l);
        }
        return std::log(sigma * sigma / (2.0 * kPi)) - std::log(re * re + im * im);
    };
}

DensitySampler::DensitySampler(std::function<double(double)> logf, double lo, double hi, int cells)
    : logf_(std::move(logf)), lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw std::invalid_argument("DensitySampler: requires lo < hi");
    if (cells < 8) cells = 8;
    edges_.resize(cells + 1);
    cum_.resize(cells + 1);
    for (int i = 0; i <= cells; ++i)
        edges_[i] = lo + (hi - lo) * static_cast<double>(i) / cells;
    cum_[0] = 0.0;
    for (int i = 0; i < cells; ++i)
        cum_[i + 1] = cum_[i] + mass_between(edges_[i], edges_[i + 1]);
    if (!(cum_.back() > 0.0) || !std::isfinite(cum_.back()))
        throw std::runtime_error("DensitySampler: degenerate density");
}

double DensitySampler::mass_between(double a, double b) const {
    return gauss_integrate([this](double x) { return std::exp(logf_(x)); }, a, b, 8);
}

double DensitySampler::cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    const size_t cell = static_cast<size_t>(it - edges_.begin()) - 1;
    return (cum_[cell] + mass_between(edges_[cell], x)) / cum_.back();
}

double DensitySampler::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("DensitySampler: u outside [0,1]");
    const double target = u * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    size_t cell = it == cum_.begin() ? 0 : static_cast<size_t>(it - cum_.begin()) - 1;
    cell = std::min(cell, edges_.size() - 2);

    double a = edges_[cell], b = edges_[cell + 1];
    double x = 0.5 * (a + b);
    const double local = target - cum_[cell];
    for (int iter = 0; iter < 100; ++iter) {
        const double f = mass_between(edges_[cell], x) - local;
        if (std::abs(f) <= 1e-10 * cum_.back()) break;
        if (f > 0)
            b = x;
        else
            a = x;
        const double dens = std::exp(logf_(x));
        double next = x - f / std::max(dens, 1e-300);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        x = next;
    }
    return x;
}

Dataset generate(const DGPSpec& dgp) {
    if (dgp.n <= 0) throw std::invalid_argument("generate: sample size must be positive");
    Rng rng(dgp.seed);
    const auto& truth = dgp.truth;

    switch (dgp.model) {
        case ModelKind::Gaussian: {
            if (dgp.sigma < 0.0) throw std::invalid_argument("generate: negative sigma");
            XYData d;
            d.x.resize(dgp.n);
            d.y.resize(dgp.n);
            for (int i = 0; i < dgp.n; ++i) {
                d.x[i] = draw_design(dgp, rng);
                d.y[i] = truth(d.x[i]) + dgp.sigma * rng.normal();
            }
            return d;
        }
        case ModelKind::Logistic: {
            XYData d;
            d.x.resize(dgp.n);
            d.y.resize(dgp.n);
            for (int i = 0; i < dgp.n; ++i) {
                d.x[i] = draw_design(dgp, rng);
                const double p = 1.0 / (1.0 + std::exp(-truth(d.x[i])));
                d.y[i] = rng.uniform() < p ? 1.0 : 0.0;
            }
            return d;
        }
        case ModelKind::Poisson: {
            XYData d;
            d.x.resize(dgp.n);
            d.y.resize(dgp.n);
            for (int i = 0; i < dgp.n; ++i) {
                d.x[i] = draw_design(dgp, rng);
                d.y[i] = rng.poisson(std::exp(truth(d.x[i])));
            }
            return d;
        }
        case ModelKind::LogDensity: {
            if (dgp.design != DesignDensity::Uniform)
                throw std::invalid_argument("generate: density sampling draws from the truth itself");
            DensitySampler sampler([&truth](double x) { return truth(x); }, dgp.domain_lo,
                                   dgp.domain_hi);
            PointData d;
            d.x.resize(dgp.n);
            for (int i = 0; i < dgp.n; ++i) d.x[i] = sampler.quantile(rng.uniform());
            return d;
        }
        case ModelKind::Hazard: {
            if (!(dgp.censor_bound > 0.0))
                throw std::invalid_argument("generate: censor bound must be positive");
            SurvivalData d;
            d.x.resize(dgp.n);
            d.time.resize(dgp.n);
            d.event.resize(dgp.n);
            for (int i = 0; i < dgp.n; ++i) {
                d.x[i] = draw_design(dgp, rng);
                const double t = rng.exponential(std::exp(truth(d.x[i])));
                const double c = dgp.censor_bound * rng.uniform();
                d.time[i] = std::min(t, c);
                d.event[i] = t <= c ? 1 : 0;
            }
            return d;
        }
        case ModelKind::Quantile: {
            if (!(dgp.tau > 0.0 && dgp.tau < 1.0))
                throw std::invalid_argument("generate: tau outside (0,1)");
            XYData d;
            d.x.resize(dgp.n);
            d.y.resize(dgp.n);
            const double offset = dgp.qnoise == QuantileNoise::Gaussian
                                      ? normal_quantile(dgp.tau)
                                      : t3_quantile(dgp.tau);
            for (int i = 0; i < dgp.n; ++i) {
                d.x[i] = draw_design(dgp, rng);
                const double z =
                    dgp.qnoise == QuantileNoise::Gaussian ? rng.normal() : rng.student_t3();
                d.y[i] = truth(d.x[i]) + dgp.qnoise_scale * (z - offset);
            }
            return d;
        }
        case ModelKind::Spectral: {
            const auto series = simulate_ar(dgp.ar, dgp.ar_sigma, dgp.n, rng);
            return periodogram(series);
        }
    }
    throw std::logic_error("generate: unreachable");
}

ModelSpec model_for(const DGPSpec& dgp) {
    switch (dgp.model) {
        case ModelKind::Gaussian: return Gaussian{};
        case ModelKind::Logistic: return ExpFamily::logistic();
        case ModelKind::Poisson: return ExpFamily::poisson();
        case ModelKind::LogDensity: return LogDensity{};
        case ModelKind::Hazard: return Hazard{};
        case ModelKind::Quantile: return Quantile{dgp.tau, 0.0};
        case ModelKind::Spectral: return Spectral{};
    }
    throw std::logic_error("model_for: unreachable");
}

}  // namespace penspline
