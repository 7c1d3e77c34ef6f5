#pragma once

#include <string>
#include <vector>

#include "penspline/config.hpp"
#include "penspline/simulate.hpp"
#include "penspline/solver.hpp"

namespace penspline {

// delta_n or lambda_n tuning sequence c * n^{-exponent}
struct PowerRule {
    double c = 1.0;
    double exponent = 0.5;
    double at(double n) const { return c * std::pow(n, -exponent); }
};

// One rate-of-convergence scenario: a likelihood context, a truth of declared
// smoothness p, and the (delta_n, lambda_n) tuning rules placing it in one of
// the seven regimes.
struct ScenarioSpec {
    std::string case_label;  // I.1, I.2, I.3, II.1, II.2, III.1, III.2
    DGPSpec dgp;             // dgp.n is overridden by the grid
    int m = 3;
    int q = 2;
    PowerRule knot_rule;    // delta_n
    PowerRule lambda_rule;  // lambda_n
    std::vector<int> n_grid = {256, 512, 1024, 2048, 4096, 8192};
    int replications = 100;
    std::uint64_t seed = 0;
    double tolerance = 0.15;
    int workers = 0;  // 0 = hardware concurrency

    int p() const { return truth_smoothness(dgp.truth); }
    int p_prime() const { return std::min(p(), m + 1); }
    int knots_for(int n) const;
    double lambda_for(int n) const { return lambda_rule.at(n); }

    // rejects q/m/p violations and tuning rules outside the labeled regime
    void validate() const;
};

ScenarioSpec scenario_from_config(const Config& cfg);
DGPSpec dgp_from_config(const Config& cfg);

// Table of best achievable exponents per case: the report's slope target is
// the negative of this.
double expected_exponent(const ScenarioSpec& spec);

struct RatePoint {
    int n = 0;
    int k = 0;
    double lambda = 0.0;
    double mse_mean = 0.0, mse_se = 0.0;
    double pen_mean = 0.0, pen_se = 0.0;  // lambda_n * J_q(fit)
    int nonconverged = 0;
};

struct RateReport {
    int schema_version = 1;
    std::string case_label;
    std::string model;
    int m = 0, q = 0, p = 0;
    std::uint64_t seed = 0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::vector<RatePoint> points;
    double slope = 0.0, slope_se = 0.0;
    bool pass = false;
    bool pass_undefined = false;
    std::vector<std::string> warnings;
    double wall_ms = 0.0;

    std::string to_json(bool include_wall = true) const;
    static RateReport from_json(const std::string& text);
};

// Monte Carlo sweep over n_grid x replications; aborts when more than 1% of
// the fits fail to converge.
RateReport run_scenario(const ScenarioSpec& spec);

struct DecompositionRow {
    int n = 0;
    double estimation = 0.0;    // mean ||fit - population fit||^2
    double approximation = 0.0; // ||population fit - truth||^2
    double total = 0.0;         // mean ||fit - truth||^2
};

struct DecompositionReport {
    std::vector<DecompositionRow> rows;
    std::string to_json() const;
};

// Gaussian-only split of the error through the population penalized fit.
DecompositionReport decomposition_report(const ScenarioSpec& spec);

// OLS fit of y on x; slope_se is NaN-free (0 when dof < 1).
void ols_slope(const std::vector<double>& x, const std::vector<double>& y, double& slope,
               double& se);

// Shared worker loop: runs fn(0..count-1) on up to `workers` threads,
// rethrowing the first exception.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace penspline
