#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "penspline/basis.hpp"

namespace penspline {

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct XYData {
    std::vector<double> x, y;
    bool operator==(const XYData&) const = default;
};

struct PointData {
    std::vector<double> x;
    bool operator==(const PointData&) const = default;
};

struct SurvivalData {
    std::vector<double> x;
    std::vector<double> time;  // observed T ^ C
    std::vector<std::uint8_t> event;
    bool operator==(const SurvivalData&) const = default;
};

struct PeriodogramData {
    std::vector<double> freq;      // Fourier grid 2 pi k / T on [0, pi]
    std::vector<double> ordinate;  // nonnegative periodogram values
    std::vector<std::uint8_t> boundary;

    // the 1/[T/2] likelihood scaling; grid points at lambda > 0
    int whittle_norm() const;
    bool operator==(const PeriodogramData&) const = default;
};

using Dataset = std::variant<XYData, PointData, SurvivalData, PeriodogramData>;

// ---------------------------------------------------------------------------
// Model variants: each defines a concave log-likelihood in the coefficients
// ---------------------------------------------------------------------------

// l(h) = -(1/n) sum (Y_i - h(X_i))^2
struct Gaussian {};

// l(h) = (1/n) sum [B(h(X_i)) Y_i - C(h(X_i))], mean A = C'/B'
struct ExpFamily {
    std::string name;
    std::function<double(double)> B, dB, d2B;
    std::function<double(double)> C, dC, d2C;
    double eta_clamp = 30.0;  // |h| beyond this signals divergence

    double mean(double eta) const { return dC(eta) / dB(eta); }

    static ExpFamily logistic();
    static ExpFamily poisson();
};

// l(h) = (1/n) sum h(X_i) - log int exp h; fit on the zero-integral subspace
struct LogDensity {};

// l(h) = (1/n) sum [h(X_i) event_i - (T_i ^ C_i) exp h(X_i)]
struct Hazard {};

// l(h) = -(1/n) sum rho_tau(Y_i - h(X_i)); eps > 0 smooths the check loss
// (quadratic on |u| <= eps, linear outside, value- and slope-matched)
struct Quantile {
    double tau = 0.5;
    double eps = 0.0;
};

// Whittle likelihood of the periodogram on [0, pi]:
// l(h) = (1/[T/2]) sum_k (delta_pi(l_k)/2 - 1) [h(l_k) + I_k exp(-h(l_k))]
struct Spectral {};

using ModelSpec = std::variant<Gaussian, ExpFamily, LogDensity, Hazard, Quantile, Spectral>;

std::string model_name(const ModelSpec& model);

// ---------------------------------------------------------------------------
// Objective / gradient / curvature in the spline coefficients
// ---------------------------------------------------------------------------

// Binds (model, data, basis) and caches basis values at the observations so
// repeated evaluations inside the solver stay cheap. Must not outlive its
// constructor arguments.
class ModelEvaluator {
public:
    ModelEvaluator(const ModelSpec& model, const Dataset& data, const BasisSpec& basis);

    int dim() const { return basis_.dim(); }
    // -inf signals divergence (overflow guard tripped)
    double objective(const VectorXd& coeffs) const;
    VectorXd gradient(const VectorXd& coeffs) const;
    MatrixXd curvature(const VectorXd& coeffs) const;
    bool has_curvature() const;

private:
    const ModelSpec& model_;
    const BasisSpec& basis_;
    std::vector<int> first_;
    std::vector<double> bval_;  // n x (m+1), row-major
    // responses flattened out of the dataset variant
    std::vector<double> xs_, ys_, times_;
    std::vector<std::uint8_t> events_;
    std::vector<double> wts_;  // spectral likelihood weights
    double norm_ = 1.0;        // 1/n or 1/[T/2]
    // quadrature cache for the log-density normalizer moments
    std::vector<double> qx_, qw_;
    std::vector<int> qfirst_;
    std::vector<double> qb_;

    double eta_at(size_t i, const VectorXd& c) const;
    double log_normalizer(const VectorXd& c) const;
    void normalizer_moments(const VectorXd& c, double& z, VectorXd& mom1, MatrixXd* mom2) const;
};

double objective(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                 const VectorXd& coeffs);
VectorXd gradient(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                  const VectorXd& coeffs);
MatrixXd curvature(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                   const VectorXd& coeffs);

// smoothed check loss and derivatives
double check_loss(double u, double tau, double eps);
double check_psi(double u, double tau, double eps);
double check_psi2(double u, double tau, double eps);

// ---------------------------------------------------------------------------
// Linear constraints
// ---------------------------------------------------------------------------

// rows * nullbasis = 0; nullbasis has orthonormal columns spanning the
// constraint null space.
struct ConstraintSpec {
    MatrixXd rows;
    MatrixXd nullbasis;

    int reduced_dim() const { return static_cast<int>(nullbasis.cols()); }
};

ConstraintSpec constraints_from_rows(const MatrixXd& rows);

// single row r_j = int B_j dx
ConstraintSpec zero_integral_constraint(const BasisSpec& basis);

// g'(lo) = g'''(lo) = g'(hi) = g'''(hi) = 0; requires m >= 3
ConstraintSpec spectral_boundary_constraints(const BasisSpec& basis);

}  // namespace penspline
