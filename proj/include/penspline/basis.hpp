#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace penspline {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KnotScheme { Equal, Jittered };

// Knot sequence on [lo, hi] with strictly increasing interior knots and a
// declared mesh-ratio bound (max gap / min gap over the full partition).
struct KnotVector {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> interior;
    double ratio_bound = 2.0;

    KnotVector() = default;
    KnotVector(double a, double b, std::vector<double> inner, double bound = 2.0);

    int count() const { return static_cast<int>(interior.size()); }
    double max_gap() const;
    double min_gap() const;
    double mesh_ratio() const { return max_gap() / min_gap(); }
    // {lo, t_1, ..., t_k, hi}
    std::vector<double> breakpoints() const;
    void validate() const;

    bool operator==(const KnotVector& other) const {
        return lo == other.lo && hi == other.hi && interior == other.interior;
    }
};

// k interior knots on (a, b). Equal spacing gives (b-a)/(k+1); the jittered
// scheme draws gaps uniformly in [1, ratio_bound] before normalizing, so the
// mesh ratio never exceeds the bound.
KnotVector make_knots(double a, double b, int k, KnotScheme scheme = KnotScheme::Equal,
                      double ratio_bound = 2.0, std::uint64_t seed = 0);

// Weight function on the basis domain with a declared polynomial degree;
// degree < 0 marks a non-polynomial weight and switches Gram assembly to
// adaptive quadrature.
struct Weight {
    std::function<double(double)> f;
    int degree = 0;
    static Weight one() {
        return Weight{[](double) { return 1.0; }, 0};
    }
};

// Degree-m B-spline space over a knot vector; dimension N = m + k + 1.
class BasisSpec {
public:
    BasisSpec(KnotVector knots, int degree);

    int degree() const { return degree_; }
    int dim() const { return dim_; }
    const KnotVector& knots() const { return knots_; }

    // Index of the knot interval containing x (clamped basis convention,
    // right-closed at the domain end).
    int find_span(double x) const;

    // Writes the m+1 possibly nonzero r-th derivative values at x into `out`
    // and returns the index of the first one. Requires x in [lo, hi], r <= m.
    int eval_local(double x, int deriv, double* out) const;

    // Dense length-N evaluation.
    VectorXd eval(double x, int deriv = 0) const;

    // Greville abscissae: the coefficients of x on the basis, so linear
    // functions have coefficients a + b * greville.
    std::vector<double> greville_sites() const;

    bool same_space(const BasisSpec& other) const {
        return degree_ == other.degree_ && knots_ == other.knots_;
    }

private:
    KnotVector knots_;
    int degree_;
    int dim_;
    std::vector<double> ext_;  // clamped knot sequence, length N + m + 1
};

// A concrete spline: basis plus coefficients. Value semantics; evaluation is
// the coefficient-weighted basis sum.
struct SplineFunction {
    BasisSpec basis;
    VectorXd coeffs;

    double value(double x, int deriv = 0) const;
    double operator()(double x) const { return value(x, 0); }
};

// Gram matrix G_ij = int B_i B_j w dx, assembled per knot interval with a
// Gauss rule exact for polynomial weights; banded with bandwidth m, SPD.
MatrixXd l2_gram(const BasisSpec& basis, const Weight& w = Weight::one());

struct Projection {
    SplineFunction spline;
    double error;  // || proj - f || in the w-weighted L2 norm
};

// Best approximation of f in the w-weighted L2 inner product: solves G c = r
// with r_i = int B_i f w dx (adaptive quadrature, rel tol 1e-10).
Projection best_l2_projection(const BasisSpec& basis, const std::function<double(double)>& f,
                              const Weight& w = Weight::one());

// Sup-to-L2 norm ratio over the space, A_n = max_x sqrt(b(x)^T G^{-1} b(x))
// with the unweighted Gram, maximized on a per-interval grid.
double complexity_constant(const BasisSpec& basis, int grid_density = 64);

// Max over `trials` random coefficient vectors of | ||g||_n / ||g|| - 1 |,
// where the empirical norm uses the sample (optionally weighted; default 1/n
// each) and the theoretical norm uses the Gram against `design_density`.
double empirical_norm_ratio(const BasisSpec& basis, const std::vector<double>& sample,
                            const Weight& design_density, int trials, std::uint64_t seed,
                            const std::vector<double>* sample_weights = nullptr);

}  // namespace penspline
