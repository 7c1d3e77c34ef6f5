#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "penspline/models.hpp"
#include "penspline/rng.hpp"

namespace penspline {

enum class TruthKind { SmoothSin, PowerKink, SplineTruth, Custom };

// Truth functions with a declared Sobolev smoothness tag. The kink family
// |x - c|^s has J_p finite and J_{p+1} infinite for half-integer s, giving
// p = ceil(s - 1/2); smooth truths carry a large sentinel.
struct TruthFunction {
    TruthKind kind = TruthKind::SmoothSin;
    double scale = 1.0, shift = 0.0;
    double s = 2.5, center = 0.5;
    std::shared_ptr<SplineFunction> spline;
    std::function<double(double)> fn;
    int declared_p = kSmoothSentinel;

    static constexpr int kSmoothSentinel = 1000;

    double operator()(double x) const;

    static TruthFunction smooth_sin(double scale = 1.0, double shift = 0.0);
    static TruthFunction power_kink(double s, double c, double scale = 1.0, double shift = 0.0);
    static TruthFunction spline_truth(SplineFunction f);
    static TruthFunction custom(std::function<double(double)> f, int declared_p);
};

double truth_eval(const TruthFunction& t, double x);
int truth_smoothness(const TruthFunction& t);

enum class DesignDensity { Uniform, Tilted };  // tilted: density proportional to 1 + u/2

enum class ModelKind { Gaussian, Logistic, Poisson, LogDensity, Hazard, Quantile, Spectral };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

enum class QuantileNoise { Gaussian, T3 };

struct DGPSpec {
    ModelKind model = ModelKind::Gaussian;
    TruthFunction truth;
    int n = 0;  // sample size; series length T for the spectral model
    double domain_lo = 0.0, domain_hi = 1.0;
    double sigma = 1.0;         // gaussian noise sd (sigma = 0 gives noiseless data)
    double censor_bound = 2.0;  // hazard censoring: C ~ U[0, censor_bound]
    std::vector<double> ar;     // AR coefficients, order <= 2
    double ar_sigma = 1.0;
    double tau = 0.5;  // quantile level the noise is centered at
    QuantileNoise qnoise = QuantileNoise::Gaussian;
    double qnoise_scale = 1.0;
    DesignDensity design = DesignDensity::Uniform;
    std::uint64_t seed = 0;
};

// Reproducible draw from the model's data-generating process.
Dataset generate(const DGPSpec& dgp);

// The matching likelihood context (quantile generated with eps = 0; the
// solver runs the homotopy).
ModelSpec model_for(const DGPSpec& dgp);

// Design density as a Weight on [lo, hi] (for theoretical norms).
Weight design_weight(DesignDensity design, double lo, double hi);

// log spectral density of a stationary AR process,
// eta(l) = log(sigma^2 / 2 pi) - log |1 - sum_j phi_j e^{-i j l}|^2.
std::function<double(double)> ar_log_spectral_density(std::vector<double> phi, double sigma);

// Length-T stationary AR sample (burn-in discarded); rejects nonstationary
// coefficients.
std::vector<double> simulate_ar(const std::vector<double>& phi, double sigma, int T, Rng& rng);

// I(l_k) = |sum_t x_t e^{-i l_k t}|^2 / (2 pi T) on l_k = 2 pi k / T,
// k = 0..[T/2]; radix-2 FFT for power-of-two T, direct DFT otherwise.
PeriodogramData periodogram(const std::vector<double>& series);

// Inverse-CDF sampler for the density proportional to exp(logf) on [lo, hi].
class DensitySampler {
public:
    DensitySampler(std::function<double(double)> logf, double lo, double hi, int cells = 4096);

    double total_mass() const { return cum_.back(); }
    double cdf(double x) const;
    double quantile(double u) const;  // |F(x) - u| <= 1e-10

private:
    std::function<double(double)> logf_;
    double lo_, hi_;
    std::vector<double> edges_;
    std::vector<double> cum_;  // cumulative mass at edges, cum_[0] = 0

    double mass_between(double a, double b) const;
};

}  // namespace penspline
