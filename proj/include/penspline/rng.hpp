#pragma once

#include <cstdint>
#include <random>

namespace penspline {

// Seedable generator with hand-rolled transforms. The mt19937_64 bit stream is
// pinned by the standard; std::*_distribution outputs are not, so sampling goes
// through explicit inverse-CDF / Box-Muller transforms to keep replications
// reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform on [0, 1)
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // Student t with 3 degrees of freedom: N / sqrt(chi2_3 / 3)
    double student_t3() {
        double z = normal();
        double c = normal(), d = normal(), e = normal();
        double chi2 = c * c + d * d + e * e;
        while (chi2 <= 0.0) {
            c = normal();
            chi2 = c * c;
        }
        return z / std::sqrt(chi2 / 3.0);
    }

    // Poisson by inversion; means in this toolkit stay small (clamped truths).
    int poisson(double mean);

private:
    std::mt19937_64 gen_;
};

// Standard normal quantile (Acklam rational approximation + one Newton polish).
double normal_quantile(double p);

// Quantile of the t distribution with 3 degrees of freedom.
double t3_quantile(double p);

}  // namespace penspline
