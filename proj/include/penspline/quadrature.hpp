#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace penspline {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Rules are computed on first use and cached; thread safe.
const GaussRule& gauss_legendre(int n);

// n-point Gauss-Legendre integral of f over [a, b].
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n);

// Bisection-adaptive integration: two-panel refinement against a one-panel
// estimate, recursing until |I2 - I1| <= rel_tol * |I2| or max_depth.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, int max_depth = 12);

// Vector-valued counterpart, error measured componentwise against the max norm.
Eigen::VectorXd adaptive_integrate_vec(const std::function<Eigen::VectorXd(double)>& f,
                                       double a, double b, int dim, double rel_tol = 1e-10,
                                       int max_depth = 12);

// Sum of adaptive integrals over consecutive intervals [breaks[i], breaks[i+1]].
double integrate_over_breaks(const std::function<double(double)>& f,
                             const std::vector<double>& breaks, double rel_tol = 1e-10,
                             int max_depth = 12);

}  // namespace penspline
