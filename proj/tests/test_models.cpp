#include <doctest.h>

#include <cmath>

#include "penspline/models.hpp"
#include "penspline/quadrature.hpp"
#include "penspline/rng.hpp"
#include "penspline/simulate.hpp"

using namespace penspline;

namespace {

BasisSpec small_basis(int m = 3, int k = 4) { return BasisSpec(make_knots(0.0, 1.0, k), m); }

XYData random_xy(int n, std::uint64_t seed) {
    Rng rng(seed);
    XYData d;
    d.x.resize(n);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.x[i] = rng.uniform();
        d.y[i] = std::sin(2.0 * M_PI * d.x[i]) + 0.3 * rng.normal();
    }
    return d;
}

VectorXd random_coeffs(const BasisSpec& basis, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    VectorXd c(basis.dim());
    for (int i = 0; i < c.size(); ++i) c[i] = scale * rng.normal();
    return c;
}

double fd_directional(const ModelEvaluator& ev, const VectorXd& c, const VectorXd& d) {
    const double h = 1e-5;
    return (ev.objective(c + h * d) - ev.objective(c - h * d)) / (2.0 * h);
}

}  // namespace

TEST_CASE("objective hand values") {
    BasisSpec basis = small_basis();
    const int n = 50;

    XYData zeros;
    zeros.x.resize(n);
    zeros.y.assign(n, 0.0);
    Rng rng(1);
    for (auto& x : zeros.x) x = rng.uniform();
    CHECK(objective(Gaussian{}, Dataset{zeros}, basis, VectorXd::Zero(basis.dim())) ==
          doctest::Approx(0.0));

    // median check loss is half the absolute loss
    XYData d = random_xy(n, 2);
    const double obj = objective(Quantile{0.5, 0.0}, Dataset{d}, basis, VectorXd::Zero(basis.dim()));
    double mean_abs = 0.0;
    for (double y : d.y) mean_abs += std::abs(y);
    mean_abs /= n;
    CHECK(obj == doctest::Approx(-0.5 * mean_abs));

    // uniform log-density scores zero
    PointData pts;
    pts.x = d.x;
    CHECK(objective(LogDensity{}, Dataset{pts}, basis, VectorXd::Zero(basis.dim())) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("poisson gradient vanishes at the matching constant") {
    BasisSpec basis = small_basis();
    XYData d;
    Rng rng(3);
    d.x.resize(80);
    d.y.assign(80, 1.0);
    for (auto& x : d.x) x = rng.uniform();
    VectorXd g = gradient(ExpFamily::poisson(), Dataset{d}, basis, VectorXd::Zero(basis.dim()));
    CHECK(g.norm() < 1e-14);
}

TEST_CASE("gradients match finite differences across variants") {
    BasisSpec basis = small_basis();
    Rng rng(4);

    auto check_model = [&](const ModelSpec& model, const Dataset& data, double scale) {
        ModelEvaluator ev(model, data, basis);
        const VectorXd c = random_coeffs(basis, 11, scale);
        const VectorXd g = ev.gradient(c);
        for (int t = 0; t < 4; ++t) {
            VectorXd d = random_coeffs(basis, 100 + t);
            d /= d.norm();
            const double fd = fd_directional(ev, c, d);
            const double an = g.dot(d);
            CHECK(an == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
        }
    };

    XYData xy = random_xy(60, 5);
    check_model(Gaussian{}, Dataset{xy}, 1.0);
    check_model(Quantile{0.3, 1e-2}, Dataset{xy}, 1.0);

    XYData binary = xy;
    for (auto& y : binary.y) y = y > 0 ? 1.0 : 0.0;
    check_model(ExpFamily::logistic(), Dataset{binary}, 0.7);

    XYData counts = xy;
    {
        Rng r2(6);
        for (size_t i = 0; i < counts.y.size(); ++i) counts.y[i] = r2.poisson(2.0);
    }
    check_model(ExpFamily::poisson(), Dataset{counts}, 0.5);

    PointData pts;
    pts.x = xy.x;
    check_model(LogDensity{}, Dataset{pts}, 0.8);

    SurvivalData surv;
    {
        Rng r3(7);
        surv.x.resize(60);
        surv.time.resize(60);
        surv.event.resize(60);
        for (int i = 0; i < 60; ++i) {
            surv.x[i] = r3.uniform();
            surv.time[i] = r3.exponential(1.0);
            surv.event[i] = r3.uniform() < 0.7 ? 1 : 0;
        }
    }
    check_model(Hazard{}, Dataset{surv}, 0.6);

    DGPSpec sp;
    sp.model = ModelKind::Spectral;
    sp.ar = {0.5};
    sp.n = 256;
    sp.seed = 8;
    const Dataset per = generate(sp);
    check_model(Spectral{}, per, 0.5);
}

TEST_CASE("curvature closed forms") {
    BasisSpec basis = small_basis();
    XYData d = random_xy(40, 9);
    const int N = basis.dim(), m = basis.degree();

    MatrixXd BtB = MatrixXd::Zero(N, N);
    std::vector<double> vals(m + 1);
    for (size_t i = 0; i < d.x.size(); ++i) {
        const int first = basis.eval_local(d.x[i], 0, vals.data());
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b)
                BtB(first + a, first + b) += vals[a] * vals[b];
    }

    MatrixXd Hg = curvature(Gaussian{}, Dataset{d}, basis, random_coeffs(basis, 10));
    CHECK((Hg + 2.0 / d.x.size() * BtB).cwiseAbs().maxCoeff() < 1e-12);

    XYData binary = d;
    for (auto& y : binary.y) y = y > 0 ? 1.0 : 0.0;
    MatrixXd Hl = curvature(ExpFamily::logistic(), Dataset{binary}, basis, VectorXd::Zero(N));
    CHECK((Hl + 0.25 / d.x.size() * BtB).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log-density curvature annihilates the constant direction") {
    BasisSpec basis = small_basis();
    PointData pts;
    Rng rng(12);
    pts.x.resize(50);
    for (auto& x : pts.x) x = rng.uniform();
    MatrixXd H = curvature(LogDensity{}, Dataset{pts}, basis, random_coeffs(basis, 13, 0.5));
    VectorXd ones = VectorXd::Ones(basis.dim());
    CHECK(std::abs(ones.dot(H * ones)) < 1e-10);
}

TEST_CASE("raw check loss has no curvature") {
    BasisSpec basis = small_basis();
    XYData d = random_xy(20, 14);
    CHECK_THROWS_AS(curvature(Quantile{0.5, 0.0}, Dataset{d}, basis, VectorXd::Zero(basis.dim())),
                    std::invalid_argument);
}

TEST_CASE("every variant stays concave at random points") {
    BasisSpec basis(make_knots(0.0, 1.0, 3), 2);
    const int N = basis.dim();
    Rng rng(15);
    int draws = 0;
    for (int rep = 0; rep < 100; ++rep) {
        XYData xy = random_xy(30, 200 + rep);
        XYData binary = xy;
        for (auto& y : binary.y) y = y > 0 ? 1.0 : 0.0;
        PointData pts;
        pts.x = xy.x;
        DGPSpec sp;
        sp.model = ModelKind::Spectral;
        sp.ar = {0.4};
        sp.n = 64;
        sp.seed = rep;
        SurvivalData surv;
        surv.x = xy.x;
        surv.time.assign(30, 0.0);
        surv.event.assign(30, 0);
        for (int i = 0; i < 30; ++i) {
            surv.time[i] = rng.exponential(1.0);
            surv.event[i] = rng.uniform() < 0.5;
        }

        const std::pair<ModelSpec, Dataset> cases[] = {
            {Gaussian{}, Dataset{xy}},
            {ExpFamily::logistic(), Dataset{binary}},
            {ExpFamily::poisson(), Dataset{binary}},
            {LogDensity{}, Dataset{pts}},
            {Hazard{}, Dataset{surv}},
            {Quantile{0.7, 1e-2}, Dataset{xy}},
            {Spectral{}, generate(sp)},
        };
        const VectorXd c = random_coeffs(basis, 300 + rep, 0.6);
        for (const auto& [model, data] : cases) {
            MatrixXd H = curvature(model, data, basis, c);
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
            CHECK(es.eigenvalues().maxCoeff() <= 1e-8);
            ++draws;
        }
    }
    CHECK(draws == 700);
}

TEST_CASE("exp-family score has zero mean at the truth") {
    // truth inside the spline space, so E l'[eta0; B_j] = 0 exactly
    BasisSpec basis(make_knots(0.0, 1.0, 2), 2);
    VectorXd truth_coeffs = random_coeffs(basis, 16, 0.4);
    SplineFunction truth{basis, truth_coeffs};
    DGPSpec dgp;
    dgp.truth = TruthFunction::spline_truth(truth);
    dgp.n = 150;

    for (ModelKind kind : {ModelKind::Logistic, ModelKind::Poisson}) {
        dgp.model = kind;
        const ModelSpec model = model_for(dgp);
        const int R = 200;
        std::vector<double> proj(R);
        VectorXd ones = VectorXd::Ones(basis.dim());
        for (int r = 0; r < R; ++r) {
            dgp.seed = 7000 + r;
            VectorXd g = gradient(model, generate(dgp), basis, truth_coeffs);
            proj[r] = ones.dot(g);
        }
        double mean = 0.0;
        for (double v : proj) mean += v;
        mean /= R;
        double var = 0.0;
        for (double v : proj) var += (v - mean) * (v - mean);
        var /= (R - 1);
        const double tstat = mean / std::sqrt(var / R);
        INFO(model_name(model));
        CHECK(std::abs(tstat) < 2.601);  // 1% two-sided, dof 199
    }
}

TEST_CASE("normalized log-density integrates to one") {
    BasisSpec basis = small_basis();
    for (int t = 0; t < 5; ++t) {
        SplineFunction h{basis, random_coeffs(basis, 20 + t, 1.5)};
        const double z = adaptive_integrate([&](double x) { return std::exp(h.value(x)); }, 0, 1);
        const double total =
            adaptive_integrate([&](double x) { return std::exp(h.value(x)) / z; }, 0, 1);
        CHECK(std::abs(total - 1.0) < 1e-8);
    }
}

TEST_CASE("quantile smoothing bias is O(eps)") {
    BasisSpec basis = small_basis();
    Rng rng(22);
    for (int t = 0; t < 1000; ++t) {
        XYData d = random_xy(8, 4000 + t);
        const VectorXd c = random_coeffs(basis, 5000 + t, 0.5);
        const double tau = 0.1 + 0.8 * rng.uniform();
        const double eps = std::pow(10.0, -1.0 - 3.0 * rng.uniform());
        const double a = objective(Quantile{tau, eps}, Dataset{d}, basis, c);
        const double b = objective(Quantile{tau, eps / 10.0}, Dataset{d}, basis, c);
        CHECK(std::abs(a - b) <= 0.25 * eps + 1e-15);
    }
}

TEST_CASE("zero integral constraint") {
    BasisSpec basis = small_basis();
    ConstraintSpec cons = zero_integral_constraint(basis);
    CHECK(cons.rows.rows() == 1);
    CHECK(cons.nullbasis.cols() == basis.dim() - 1);

    // constants violate the constraint: the row sums to the domain length
    VectorXd ones = VectorXd::Ones(basis.dim());
    CHECK(cons.rows.row(0).dot(ones) == doctest::Approx(1.0));

    // null-basis columns really integrate to zero
    for (int j = 0; j < cons.nullbasis.cols(); ++j) {
        SplineFunction g{basis, cons.nullbasis.col(j)};
        const double integral = adaptive_integrate([&](double x) { return g.value(x); }, 0, 1);
        CHECK(std::abs(integral) < 1e-10);
    }
    MatrixXd ortho = cons.nullbasis.transpose() * cons.nullbasis;
    CHECK((ortho - MatrixXd::Identity(ortho.rows(), ortho.cols())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cons.rows * cons.nullbasis).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero integral null space matches a Gram-Schmidt oracle") {
    BasisSpec basis(make_knots(0.0, 1.0, 0), 3);  // N = 4
    ConstraintSpec cons = zero_integral_constraint(basis);
    const VectorXd r = cons.rows.row(0).transpose();

    // oracle: orthogonalize the coordinate directions against r
    MatrixXd span(4, 3);
    int col = 0;
    for (int j = 0; j < 4 && col < 3; ++j) {
        VectorXd v = VectorXd::Unit(4, j);
        v -= r * (r.dot(v) / r.squaredNorm());
        for (int c = 0; c < col; ++c) v -= span.col(c) * span.col(c).dot(v);
        if (v.norm() > 1e-8) span.col(col++) = v / v.norm();
    }
    REQUIRE(col == 3);
    // same subspace: projectors agree
    MatrixXd p1 = cons.nullbasis * cons.nullbasis.transpose();
    MatrixXd p2 = span * span.transpose();
    CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spectral boundary constraints") {
    BasisSpec basis(make_knots(0.0, M_PI, 10), 3);
    ConstraintSpec cons = spectral_boundary_constraints(basis);
    CHECK(cons.rows.rows() == 4);
    CHECK(cons.nullbasis.cols() == basis.dim() - 4);

    Eigen::JacobiSVD<MatrixXd> svd(cons.rows);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-9 * svd.singularValues()[0]) ++rank;
    CHECK(rank == 4);

    VectorXd ones = VectorXd::Ones(basis.dim());
    CHECK((cons.rows * ones).cwiseAbs().maxCoeff() < 1e-12);

    for (int j = 0; j < cons.nullbasis.cols(); ++j) {
        SplineFunction g{basis, cons.nullbasis.col(j)};
        CHECK(std::abs(g.value(0.0, 1)) < 1e-9);
        CHECK(std::abs(g.value(0.0, 3)) < 1e-9);
        CHECK(std::abs(g.value(M_PI, 1)) < 1e-9);
        CHECK(std::abs(g.value(M_PI, 3)) < 1e-9);
    }

    BasisSpec low(make_knots(0.0, M_PI, 10), 2);
    CHECK_THROWS_AS(spectral_boundary_constraints(low), std::invalid_argument);
}

TEST_CASE("model/dataset mismatch is rejected") {
    BasisSpec basis = small_basis();
    PointData pts;
    pts.x = {0.5};
    CHECK_THROWS_AS(objective(Gaussian{}, Dataset{pts}, basis, VectorXd::Zero(basis.dim())),
                    std::invalid_argument);
    XYData xy;
    xy.x = {0.5};
    xy.y = {1.0};
    CHECK_THROWS_AS(objective(LogDensity{}, Dataset{xy}, basis, VectorXd::Zero(basis.dim())),
                    std::invalid_argument);
}

TEST_CASE("exp-family clamp reports divergence") {
    BasisSpec basis = small_basis();
    XYData d = random_xy(10, 33);
    const double obj = objective(ExpFamily::poisson(), Dataset{d}, basis,
                                 VectorXd::Constant(basis.dim(), 35.0));
    CHECK(std::isinf(obj));
    CHECK(obj < 0);
}
