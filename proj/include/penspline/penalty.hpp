#pragma once

#include "penspline/basis.hpp"

namespace penspline {

// Exact Gram matrix of the order-q roughness functional over the basis:
// P_ij = int B_i^(q) B_j^(q) dx. PSD with null space the degree-(q-1)
// polynomials; banded with bandwidth m.
struct PenaltyOperator {
    BasisSpec basis;
    int order;      // q, 1 <= q <= m
    MatrixXd gram;  // N x N

    // c^T P c = J_q of the realized spline
    double quadratic_form(const VectorXd& c) const { return c.dot(gram * c); }
};

PenaltyOperator penalty_gram(const BasisSpec& basis, int q);

// Simultaneous diagonalization of (P, G): eigenvalues rho (ascending) and
// coefficient columns phi with phi^T G phi = I and phi^T P phi = diag(rho).
struct EigenSystem {
    VectorXd rho;
    MatrixXd phi;
};

EigenSystem eigen_decompose(const PenaltyOperator& pen, const MatrixXd& gram);

// sum_nu 1 / (1 + lambda * rho_nu) over the computed spectrum (lambda >= 0).
double trace_sum(const EigenSystem& sys, double lambda);

}  // namespace penspline
