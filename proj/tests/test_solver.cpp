#include <doctest.h>

#include <cmath>

#include "penspline/quadrature.hpp"
#include "penspline/rng.hpp"
#include "penspline/simulate.hpp"
#include "penspline/solver.hpp"

using namespace penspline;

namespace {

XYData gaussian_data(int n, std::uint64_t seed, double sigma = 0.3) {
    DGPSpec dgp;
    dgp.model = ModelKind::Gaussian;
    dgp.truth = TruthFunction::smooth_sin();
    dgp.n = n;
    dgp.sigma = sigma;
    dgp.seed = seed;
    return std::get<XYData>(generate(dgp));
}

MatrixXd design_matrix(const BasisSpec& basis, const std::vector<double>& xs) {
    MatrixXd B(xs.size(), basis.dim());
    for (size_t i = 0; i < xs.size(); ++i) B.row(i) = basis.eval(xs[i]).transpose();
    return B;
}

}  // namespace

TEST_CASE("unpenalized gaussian fit solves the normal equations") {
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    XYData d = gaussian_data(300, 41);
    PenaltyOperator pen = penalty_gram(basis, 2);
    PenalizedFit fit = fit_penalized(Gaussian{}, Dataset{d}, basis, pen, 0.0);
    REQUIRE(fit.converged);

    MatrixXd B = design_matrix(basis, d.x);
    Eigen::Map<const VectorXd> y(d.y.data(), d.y.size());
    VectorXd ls = (B.transpose() * B).ldlt().solve(B.transpose() * y);
    CHECK((fit.coeffs - ls).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.grad_norm <= 1e-8 * std::max(1.0, std::abs(fit.objective_value)));
}

TEST_CASE("penalized gaussian fit matches the closed-form ridge system") {
    BasisSpec basis(make_knots(0.0, 1.0, 8), 3);
    XYData d = gaussian_data(200, 42);
    PenaltyOperator pen = penalty_gram(basis, 2);
    const double lambda = 3e-4;
    PenalizedFit fit = fit_penalized(Gaussian{}, Dataset{d}, basis, pen, lambda);
    REQUIRE(fit.converged);

    const double n = static_cast<double>(d.x.size());
    MatrixXd B = design_matrix(basis, d.x);
    Eigen::Map<const VectorXd> y(d.y.data(), d.y.size());
    MatrixXd A = 2.0 / n * B.transpose() * B + 2.0 * lambda * pen.gram;
    VectorXd c = A.ldlt().solve(2.0 / n * B.transpose() * y);
    CHECK((fit.coeffs - c).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("infinite penalty collapses to the least squares line") {
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    XYData d = gaussian_data(250, 43);
    PenaltyOperator pen = penalty_gram(basis, 2);
    PenalizedFit fit = fit_penalized(Gaussian{}, Dataset{d}, basis, pen, 1e6);
    REQUIRE(fit.converged);
    CHECK(penalty_value(fit, pen) < 1e-6);

    // straight-line regression oracle
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = d.x.size();
    for (size_t i = 0; i < d.x.size(); ++i) {
        sx += d.x[i];
        sy += d.y[i];
        sxx += d.x[i] * d.x[i];
        sxy += d.x[i] * d.y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    SplineFunction g = fit.spline(basis);
    for (double x : {0.1, 0.5, 0.9})
        CHECK(g.value(x) == doctest::Approx(intercept + slope * x).epsilon(1e-3));
}

TEST_CASE("logistic fit converges quickly with a certificate") {
    DGPSpec dgp;
    dgp.model = ModelKind::Logistic;
    dgp.truth = TruthFunction::smooth_sin();
    dgp.n = 500;
    dgp.seed = 44;
    const Dataset data = generate(dgp);
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    PenalizedFit fit = fit_penalized(ExpFamily::logistic(), data, basis, pen, 1e-4);
    REQUIRE(fit.converged);
    CHECK(fit.iterations <= 30);
    CHECK(fit.grad_norm < 1e-8 * std::max(1.0, std::abs(fit.objective_value)));

    // restarts land on the same maximum
    Rng rng(45);
    for (int t = 0; t < 20; ++t) {
        FitOptions opts;
        VectorXd init(basis.dim());
        for (int i = 0; i < init.size(); ++i) init[i] = rng.normal();
        opts.init = init;
        PenalizedFit other = fit_penalized(ExpFamily::logistic(), data, basis, pen, 1e-4,
                                           nullptr, opts);
        REQUIRE(other.converged);
        CHECK(std::abs(other.objective_value - fit.objective_value) <=
              1e-6 * std::max(1.0, std::abs(fit.objective_value)));
    }
}

TEST_CASE("accepted newton steps never decrease the penalized objective") {
    BasisSpec basis(make_knots(0.0, 1.0, 5), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);

    DGPSpec dgp;
    dgp.model = ModelKind::Poisson;
    dgp.truth = TruthFunction::smooth_sin(0.8, 0.2);
    dgp.n = 300;
    dgp.seed = 46;

    std::vector<double> trace;
    FitOptions opts;
    opts.trace = &trace;
    PenalizedFit fit =
        fit_penalized(ExpFamily::poisson(), generate(dgp), basis, pen, 1e-4, nullptr, opts);
    REQUIRE(fit.converged);
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
}

TEST_CASE("fit is never worse than the zero candidate") {
    BasisSpec basis(make_knots(0.0, 1.0, 5), 2);
    PenaltyOperator pen = penalty_gram(basis, 1);
    XYData d = gaussian_data(100, 47);
    PenalizedFit fit = fit_penalized(Gaussian{}, Dataset{d}, basis, pen, 1e-3);
    const double zero_obj = objective(Gaussian{}, Dataset{d}, basis, VectorXd::Zero(basis.dim()));
    CHECK(fit.objective_value >= zero_obj);
}

TEST_CASE("penalty is monotone in lambda") {
    BasisSpec basis(make_knots(0.0, 1.0, 7), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    const double lambdas[] = {0.0, 1e-6, 1e-4, 1e-2, 1.0};
    for (int rep = 0; rep < 5; ++rep) {
        XYData d = gaussian_data(150, 500 + rep, 0.5);
        double prev = -1.0;
        for (double lam : lambdas) {
            PenalizedFit fit = fit_penalized(Gaussian{}, Dataset{d}, basis, pen, lam);
            REQUIRE(fit.converged);
            const double j = penalty_value(fit, pen);
            if (prev >= 0.0) CHECK(j <= prev + 1e-10);
            prev = j;
        }
    }
}

TEST_CASE("iteration cap flags non-convergence") {
    DGPSpec dgp;
    dgp.model = ModelKind::Logistic;
    dgp.truth = TruthFunction::smooth_sin(2.0);
    dgp.n = 400;
    dgp.seed = 48;
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    FitOptions opts;
    opts.max_iter = 1;
    PenalizedFit fit = fit_penalized(ExpFamily::logistic(), generate(dgp), basis, pen, 0.0,
                                     nullptr, opts);
    CHECK(!fit.converged);
    CHECK(fit.diagnostic == "iteration cap reached");
}

TEST_CASE("argument validation") {
    BasisSpec basis(make_knots(0.0, 1.0, 4), 2);
    BasisSpec other(make_knots(0.0, 1.0, 5), 2);
    PenaltyOperator pen = penalty_gram(other, 1);
    XYData d = gaussian_data(20, 49);
    CHECK_THROWS_AS(fit_penalized(Gaussian{}, Dataset{d}, basis, pen, 0.0),
                    std::invalid_argument);
    PenaltyOperator ok = penalty_gram(basis, 1);
    CHECK_THROWS_AS(fit_penalized(Gaussian{}, Dataset{d}, basis, ok, -1.0),
                    std::invalid_argument);
}

TEST_CASE("l2_error basics") {
    BasisSpec basis(make_knots(0.0, 1.0, 4), 2);
    VectorXd c = VectorXd::Zero(basis.dim());
    SplineFunction zero{basis, c};
    CHECK(l2_error(zero, [](double) { return 1.0; }) == doctest::Approx(1.0));
    CHECK(l2_error(zero, [](double) { return 0.0; }) < 1e-12);

    Rng rng(50);
    for (int i = 0; i < c.size(); ++i) c[i] = rng.normal();
    SplineFunction g{basis, c};
    CHECK(l2_error(g, [&g](double x) { return g.value(x); }) < 1e-12);
}

TEST_CASE("projection residual is pythagorean") {
    // truth lives in a finer space than the projection target
    BasisSpec fine(make_knots(0.0, 1.0, 17), 3);
    Rng rng(51);
    VectorXd tc(fine.dim());
    for (int i = 0; i < tc.size(); ++i) tc[i] = rng.normal();
    SplineFunction truth{fine, tc};

    BasisSpec coarse(make_knots(0.0, 1.0, 5), 3);
    auto f = [&truth](double x) { return truth.value(x); };
    Projection proj = best_l2_projection(coarse, f);
    const double err = l2_error(proj.spline, f);
    CHECK(err == doctest::Approx(proj.error * proj.error).epsilon(1e-8));
}

TEST_CASE("penalty_value closed forms") {
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    const auto greville = basis.greville_sites();
    PenalizedFit line;
    line.coeffs.resize(basis.dim());
    for (int i = 0; i < line.coeffs.size(); ++i) line.coeffs[i] = 0.3 + 1.7 * greville[i];
    CHECK(penalty_value(line, penalty_gram(basis, 2)) < 1e-12);

    PenalizedFit constant;
    constant.coeffs = VectorXd::Constant(basis.dim(), 4.2);
    for (int q = 1; q <= 3; ++q)
        CHECK(penalty_value(constant, penalty_gram(basis, q)) < 1e-12);
}

TEST_CASE("population fit limits") {
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    auto truth = [](double x) { return std::sin(2.0 * M_PI * x); };

    PenalizedFit unpen = population_fit_gaussian(truth, basis, pen, 0.0);
    Projection proj = best_l2_projection(basis, truth);
    CHECK((unpen.coeffs - proj.spline.coeffs).cwiseAbs().maxCoeff() < 1e-10);

    // exact recovery when the truth lies in the space
    Rng rng(52);
    VectorXd tc(basis.dim());
    for (int i = 0; i < tc.size(); ++i) tc[i] = rng.normal();
    SplineFunction spline_truth{basis, tc};
    PenalizedFit rec = population_fit_gaussian(
        [&spline_truth](double x) { return spline_truth.value(x); }, basis, pen, 0.0);
    CHECK(l2_error(rec, basis, [&spline_truth](double x) { return spline_truth.value(x); }) <
          1e-10);

    // heavy penalty lands on the best L2 line
    PenalizedFit heavy = population_fit_gaussian(truth, basis, pen, 1e7);
    CHECK(penalty_value(heavy, pen) < 1e-8);
    // best line for sin(2 pi x) on [0,1]: coefficients from the 2x2 moment system
    // int 1 = 1, int x = 1/2, int x^2 = 1/3; int sin = 0, int x sin = -1/(2 pi)
    Eigen::Matrix2d M;
    M << 1.0, 0.5, 0.5, 1.0 / 3.0;
    Eigen::Vector2d rhs(0.0, -1.0 / (2.0 * M_PI));
    Eigen::Vector2d ab = M.inverse() * rhs;
    SplineFunction g = heavy.spline(basis);
    for (double x : {0.2, 0.5, 0.8})
        CHECK(g.value(x) == doctest::Approx(ab[0] + ab[1] * x).epsilon(1e-3));
}

TEST_CASE("quantile homotopy runs and brackets the target") {
    DGPSpec dgp;
    dgp.model = ModelKind::Quantile;
    dgp.truth = TruthFunction::smooth_sin();
    dgp.n = 800;
    dgp.tau = 0.75;
    dgp.qnoise_scale = 0.4;
    dgp.seed = 53;
    const Dataset data = generate(dgp);
    BasisSpec basis(make_knots(0.0, 1.0, 6), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    PenalizedFit fit = fit_penalized(Quantile{0.75, 0.0}, data, basis, pen, 1e-4);
    REQUIRE(fit.converged);
    // fitted curve close to the true quantile function
    CHECK(l2_error(fit, basis, [](double x) { return std::sin(2.0 * M_PI * x); }) < 0.05);
}

TEST_CASE("constrained density fit keeps the zero-integral identity") {
    DGPSpec dgp;
    dgp.model = ModelKind::LogDensity;
    dgp.truth = TruthFunction::smooth_sin(0.8);
    dgp.n = 2000;
    dgp.seed = 54;
    const Dataset data = generate(dgp);
    BasisSpec basis(make_knots(0.0, 1.0, 8), 3);
    PenaltyOperator pen = penalty_gram(basis, 2);
    ConstraintSpec cons = zero_integral_constraint(basis);
    PenalizedFit fit = fit_penalized(LogDensity{}, data, basis, pen, 1e-4, &cons);
    REQUIRE(fit.converged);
    SplineFunction g = fit.spline(basis);
    const double integral = adaptive_integrate([&](double x) { return g.value(x); }, 0, 1);
    CHECK(std::abs(integral) < 1e-9);
}
