#pragma once

#include <optional>
#include <string>

#include "penspline/models.hpp"
#include "penspline/penalty.hpp"

namespace penspline {

struct FitOptions {
    int max_iter = 200;
    double grad_tol = 1e-8;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double ridge_floor = 1e-10;
    int quantile_homotopy_stages = 6;  // eps: 1e-1 ... 1e-6
    std::optional<VectorXd> init;      // full-length start (restarts)
    std::vector<double>* trace = nullptr;  // accepted penalized objective values
};

struct PenalizedFit {
    VectorXd coeffs;  // full length N, constraints expanded
    double lambda = 0.0;
    double objective_value = 0.0;  // penalized objective at coeffs
    double grad_norm = 0.0;        // reduced-coordinate gradient norm
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;

    SplineFunction spline(const BasisSpec& basis) const { return SplineFunction{basis, coeffs}; }
};

// Damped Newton ascent on pl(g) = l(g) - lambda J_q(g) over the (optionally
// constrained) coefficient space. Ridge escalation handles rounding-level
// indefiniteness; concavity makes any stationary point the global maximum.
// A raw (eps = 0) quantile model runs the smoothing homotopy internally.
PenalizedFit fit_penalized(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                           const PenaltyOperator& pen, double lambda,
                           const ConstraintSpec* constraints = nullptr,
                           const FitOptions& opts = {});

// int (fit - truth)^2 w dx by adaptive per-interval quadrature.
double l2_error(const SplineFunction& fit, const std::function<double(double)>& truth,
                const Weight& w = Weight::one());
double l2_error(const PenalizedFit& fit, const BasisSpec& basis,
                const std::function<double(double)>& truth, const Weight& w = Weight::one());

// J_q of the fitted spline, c^T P c.
double penalty_value(const PenalizedFit& fit, const PenaltyOperator& pen);

// Gaussian population maximizer: solves (G + lambda P) c = r with
// r_i = int B_i truth w dx; the anchor of the estimation/approximation error
// decomposition. objective_value holds the gain over the zero candidate.
PenalizedFit population_fit_gaussian(const std::function<double(double)>& truth,
                                     const BasisSpec& basis, const PenaltyOperator& pen,
                                     double lambda, const Weight& w = Weight::one());

}  // namespace penspline
