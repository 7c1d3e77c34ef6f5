#include "penspline/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "penspline/quadrature.hpp"

namespace penspline {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// constant coefficient vector matching the data scale, for the exp-family-like
// variants whose objective blows up far from the data
VectorXd initial_coeffs(const ModelSpec& model, const Dataset& data, int N) {
    VectorXd c = VectorXd::Zero(N);
    if (std::holds_alternative<Spectral>(model)) {
        const auto& per = std::get<PeriodogramData>(data);
        double mean = 0.0;
        for (double v : per.ordinate) mean += v;
        mean /= std::max<size_t>(per.ordinate.size(), 1);
        if (mean > 0.0) c.setConstant(std::log(mean));
    }
    // LogDensity starts at the uniform density, which is the zero vector on
    // the zero-integral subspace.
    return c;
}

struct ReducedProblem {
    const ModelEvaluator& ev;
    const MatrixXd& P;
    double lambda;
    const MatrixXd* Z;  // nullptr = identity

    int dim() const { return Z ? static_cast<int>(Z->cols()) : ev.dim(); }
    VectorXd expand(const VectorXd& theta) const { return Z ? VectorXd(*Z * theta) : theta; }
    VectorXd reduce(const VectorXd& full) const {
        return Z ? VectorXd(Z->transpose() * full) : full;
    }

    double value(const VectorXd& theta) const {
        const VectorXd c = expand(theta);
        const double obj = ev.objective(c);
        if (!std::isfinite(obj)) return kNegInf;
        return obj - lambda * c.dot(P * c);
    }
    VectorXd grad(const VectorXd& theta) const {
        const VectorXd c = expand(theta);
        return reduce(ev.gradient(c) - 2.0 * lambda * (P * c));
    }
    MatrixXd hess(const VectorXd& theta) const {
        const VectorXd c = expand(theta);
        MatrixXd H = ev.curvature(c) - 2.0 * lambda * P;
        if (Z) return Z->transpose() * H * (*Z);
        return H;
    }
};

PenalizedFit newton_fit(const ReducedProblem& prob, VectorXd theta, double lambda,
                        const FitOptions& opts) {
    PenalizedFit fit;
    fit.lambda = lambda;

    double obj = prob.value(theta);
    if (opts.trace) opts.trace->push_back(obj);
    if (!std::isfinite(obj)) {
        fit.coeffs = prob.expand(theta);
        fit.diagnostic = "objective not finite at the initial point";
        return fit;
    }

    for (int it = 0; it < opts.max_iter; ++it) {
        const VectorXd g = prob.grad(theta);
        fit.grad_norm = g.norm();
        if (fit.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(obj))) {
            fit.converged = true;
            break;
        }

        const MatrixXd H = prob.hess(theta);
        MatrixXd A = -H;
        double ridge = opts.ridge_floor;
        Eigen::LLT<MatrixXd> llt;
        while (true) {
            MatrixXd Ar = A;
            Ar.diagonal().array() += ridge;
            llt.compute(Ar);
            if (llt.info() == Eigen::Success) break;
            ridge *= 10.0;
            if (ridge > 1e12) {
                fit.diagnostic = "curvature factorization failed";
                fit.coeffs = prob.expand(theta);
                fit.objective_value = obj;
                fit.iterations = it;
                return fit;
            }
        }
        const VectorXd step = llt.solve(g);
        const double slope = g.dot(step);

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const double cand = prob.value(theta + alpha * step);
            if (cand >= obj + opts.armijo_c * alpha * slope) {
                theta += alpha * step;
                obj = cand;
                if (opts.trace) opts.trace->push_back(obj);
                accepted = true;
                break;
            }
            alpha *= opts.backtrack;
        }
        fit.iterations = it + 1;
        if (!accepted) {
            fit.diagnostic = "line search stalled";
            break;
        }
    }

    if (!fit.converged && fit.iterations >= opts.max_iter)
        fit.diagnostic = "iteration cap reached";
    // re-check in case the cap hit right at a stationary point
    if (!fit.converged) {
        fit.grad_norm = prob.grad(theta).norm();
        if (fit.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(obj))) fit.converged = true;
    }
    fit.coeffs = prob.expand(theta);
    fit.objective_value = obj;
    return fit;
}

}  // namespace

PenalizedFit fit_penalized(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                           const PenaltyOperator& pen, double lambda,
                           const ConstraintSpec* constraints, const FitOptions& opts) {
    if (lambda < 0.0) throw std::invalid_argument("fit_penalized: negative lambda");
    if (!pen.basis.same_space(basis))
        throw std::invalid_argument("fit_penalized: penalty built on a different basis");

    // raw check loss: run the smoothing homotopy and report the last stage
    if (const auto* q = std::get_if<Quantile>(&model); q && q->eps <= 0.0) {
        FitOptions stage_opts = opts;
        PenalizedFit fit;
        int total_iters = 0;
        for (int s = 0; s < opts.quantile_homotopy_stages; ++s) {
            Quantile smoothed{q->tau, std::pow(10.0, -(s + 1))};
            fit = fit_penalized(ModelSpec{smoothed}, data, basis, pen, lambda, constraints,
                                stage_opts);
            total_iters += fit.iterations;
            stage_opts.init = fit.coeffs;  // warm start
        }
        fit.iterations = total_iters;
        return fit;
    }

    ModelEvaluator ev(model, data, basis);
    const MatrixXd* Z = constraints ? &constraints->nullbasis : nullptr;
    ReducedProblem prob{ev, pen.gram, lambda, Z};

    VectorXd start_full =
        opts.init && opts.init->size() == basis.dim() ? *opts.init
                                                      : initial_coeffs(model, data, basis.dim());
    return newton_fit(prob, prob.reduce(start_full), lambda, opts);
}

double l2_error(const SplineFunction& fit, const std::function<double(double)>& truth,
                const Weight& w) {
    const auto breaks = fit.basis.knots().breakpoints();
    double err = 0.0;
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        auto sq = [&](double x) {
            const double d = fit.value(x) - truth(x);
            return d * d * w.f(x);
        };
        err += adaptive_integrate(sq, breaks[iv], breaks[iv + 1], 1e-9);
    }
    return err;
}

double l2_error(const PenalizedFit& fit, const BasisSpec& basis,
                const std::function<double(double)>& truth, const Weight& w) {
    return l2_error(SplineFunction{basis, fit.coeffs}, truth, w);
}

double penalty_value(const PenalizedFit& fit, const PenaltyOperator& pen) {
    return pen.quadratic_form(fit.coeffs);
}

PenalizedFit population_fit_gaussian(const std::function<double(double)>& truth,
                                     const BasisSpec& basis, const PenaltyOperator& pen,
                                     double lambda, const Weight& w) {
    if (lambda < 0.0) throw std::invalid_argument("population_fit_gaussian: negative lambda");
    const int N = basis.dim(), m = basis.degree();
    const MatrixXd G = l2_gram(basis, w);

    VectorXd rhs = VectorXd::Zero(N);
    const auto breaks = basis.knots().breakpoints();
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        const double x0 = breaks[iv], x1 = breaks[iv + 1];
        const int first = basis.find_span(0.5 * (x0 + x1)) - m;
        auto integrand = [&](double x) {
            Eigen::VectorXd v(m + 1);
            basis.eval_local(x, 0, v.data());
            return Eigen::VectorXd(v * (truth(x) * w.f(x)));
        };
        rhs.segment(first, m + 1) += adaptive_integrate_vec(integrand, x0, x1, m + 1);
    }

    const MatrixXd A = G + lambda * pen.gram;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("population_fit_gaussian: system not positive definite");

    PenalizedFit fit;
    fit.coeffs = llt.solve(rhs);
    fit.lambda = lambda;
    fit.objective_value = rhs.dot(fit.coeffs);  // gain over the zero candidate
    fit.converged = true;
    fit.diagnostic = "population";
    return fit;
}

}  // namespace penspline
