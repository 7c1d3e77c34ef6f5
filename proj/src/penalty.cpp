#include "penspline/penalty.hpp"
#include <algorithm>

#include <stdexcept>

#include "penspline/quadrature.hpp"

namespace penspline {

PenaltyOperator penalty_gram(const BasisSpec& basis, int q) {
    const int m = basis.degree();
    if (q < 1) throw std::invalid_argument("penalty_gram: order must be >= 1");
    if (q > m) throw std::invalid_argument("penalty_gram: order exceeds the spline degree");

    const int N = basis.dim();
    MatrixXd P = MatrixXd::Zero(N, N);
    const auto breaks = basis.knots().breakpoints();
    // integrand is piecewise polynomial of degree 2(m - q)
    const int nodes = m - q + 1;
    const GaussRule& rule = gauss_legendre(nodes);
    std::vector<double> vals(m + 1);
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        const double mid = 0.5 * (breaks[iv] + breaks[iv + 1]);
        const double halfw = 0.5 * (breaks[iv + 1] - breaks[iv]);
        for (int g = 0; g < nodes; ++g) {
            const double x = mid + halfw * rule.nodes[g];
            const double wt = rule.weights[g] * halfw;
            const int first = basis.eval_local(x, q, vals.data());
            for (int a = 0; a <= m; ++a)
                for (int b = 0; b <= m; ++b)
                    P(first + a, first + b) += wt * vals[a] * vals[b];
        }
    }
    return PenaltyOperator{basis, q, std::move(P)};
}

EigenSystem eigen_decompose(const PenaltyOperator& pen, const MatrixXd& gram) {
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("eigen_decompose: gram matrix not positive definite");
    const MatrixXd L = llt.matrixL();

    // whiten: solve L W = P, then L Z^T = W^T, giving Z = L^-1 P L^-T
    MatrixXd W = L.triangularView<Eigen::Lower>().solve(pen.gram);
    MatrixXd Z = L.triangularView<Eigen::Lower>().solve(W.transpose());
    Z = 0.5 * (Z + Z.transpose());

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Z);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigen_decompose: eigensolver failed");

    EigenSystem sys;
    const int N = static_cast<int>(gram.rows());
    sys.phi = L.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
    sys.rho.resize(N);
    // Rayleigh quotients on the original pair: the whitening transform smears
    // O(eps * rho_max) into the null eigenvalues, the quotient does not.
    for (int i = 0; i < N; ++i) {
        VectorXd v = sys.phi.col(i);
        const double vGv = v.dot(gram * v);
        sys.rho[i] = std::max(v.dot(pen.gram * v) / vGv, 0.0);
        sys.phi.col(i) = v / std::sqrt(vGv);
    }
    // quotient recomputation can reorder rounding-level ties
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sys.rho[a] < sys.rho[b]; });
    VectorXd rho_sorted(N);
    MatrixXd phi_sorted(N, N);
    for (int i = 0; i < N; ++i) {
        rho_sorted[i] = sys.rho[order[i]];
        phi_sorted.col(i) = sys.phi.col(order[i]);
    }
    sys.rho = std::move(rho_sorted);
    sys.phi = std::move(phi_sorted);
    return sys;
}

double trace_sum(const EigenSystem& sys, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("trace_sum: negative lambda");
    double s = 0.0;
    for (int i = 0; i < sys.rho.size(); ++i) s += 1.0 / (1.0 + lambda * sys.rho[i]);
    return s;
}

}  // namespace penspline
