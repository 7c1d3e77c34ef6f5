#include "penspline/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "penspline/quadrature.hpp"

namespace penspline {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kNormalizerNodes = 24;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

int PeriodogramData::whittle_norm() const {
    int count = 0;
    for (double l : freq)
        if (l > 1e-12) ++count;
    return std::max(count, 1);
}

ExpFamily ExpFamily::logistic() {
    ExpFamily fam;
    fam.name = "logistic";
    fam.B = [](double e) { return e; };
    fam.dB = [](double) { return 1.0; };
    fam.d2B = [](double) { return 0.0; };
    fam.C = [](double e) {
        // log(1 + exp(e)) without overflow
        return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    };
    fam.dC = [](double e) { return 1.0 / (1.0 + std::exp(-e)); };
    fam.d2C = [](double e) {
        const double p = 1.0 / (1.0 + std::exp(-e));
        return p * (1.0 - p);
    };
    return fam;
}

ExpFamily ExpFamily::poisson() {
    ExpFamily fam;
    fam.name = "poisson";
    fam.B = [](double e) { return e; };
    fam.dB = [](double) { return 1.0; };
    fam.d2B = [](double) { return 0.0; };
    fam.C = [](double e) { return std::exp(e); };
    fam.dC = [](double e) { return std::exp(e); };
    fam.d2C = [](double e) { return std::exp(e); };
    return fam;
}

std::string model_name(const ModelSpec& model) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
            if constexpr (std::is_same_v<T, ExpFamily>) return m.name;
            if constexpr (std::is_same_v<T, LogDensity>) return "density";
            if constexpr (std::is_same_v<T, Hazard>) return "hazard";
            if constexpr (std::is_same_v<T, Quantile>) return "quantile";
            if constexpr (std::is_same_v<T, Spectral>) return "spectral";
        },
        model);
}

double check_loss(double u, double tau, double eps) {
    if (eps <= 0.0) return (tau - (u < 0.0 ? 1.0 : 0.0)) * u;
    if (u > eps) return tau * u;
    if (u < -eps) return (tau - 1.0) * u;
    return u * u / (4.0 * eps) + (tau - 0.5) * u + 0.25 * eps;
}

double check_psi(double u, double tau, double eps) {
    if (eps <= 0.0) return u >= 0.0 ? tau : tau - 1.0;
    if (u > eps) return tau;
    if (u < -eps) return tau - 1.0;
    return u / (2.0 * eps) + tau - 0.5;
}

double check_psi2(double u, double tau, double eps) {
    (void)tau;
    if (eps <= 0.0) return 0.0;
    return std::abs(u) < eps ? 1.0 / (2.0 * eps) : 0.0;
}

ModelEvaluator::ModelEvaluator(const ModelSpec& model, const Dataset& data,
                               const BasisSpec& basis)
    : model_(model), basis_(basis) {
    const int m = basis_.degree();

    auto cache_points = [&](const std::vector<double>& xs) {
        const size_t n = xs.size();
        if (n == 0) throw std::invalid_argument("ModelEvaluator: empty dataset");
        first_.resize(n);
        bval_.resize(n * (m + 1));
        for (size_t i = 0; i < n; ++i)
            first_[i] = basis_.eval_local(xs[i], 0, &bval_[i * (m + 1)]);
        norm_ = 1.0 / static_cast<double>(n);
    };

    const bool want_xy = std::holds_alternative<Gaussian>(model_) ||
                         std::holds_alternative<ExpFamily>(model_) ||
                         std::holds_alternative<Quantile>(model_);
    if (want_xy) {
        const auto* xy = std::get_if<XYData>(&data);
        if (!xy) throw std::invalid_argument("ModelEvaluator: model expects x,y data");
        if (xy->x.size() != xy->y.size())
            throw std::invalid_argument("ModelEvaluator: x/y length mismatch");
        xs_ = xy->x;
        ys_ = xy->y;
        cache_points(xs_);
    } else if (std::holds_alternative<LogDensity>(model_)) {
        const auto* pts = std::get_if<PointData>(&data);
        if (!pts) throw std::invalid_argument("ModelEvaluator: density model expects point data");
        xs_ = pts->x;
        cache_points(xs_);
        // quadrature grid for the normalizer moments
        const auto breaks = basis_.knots().breakpoints();
        const GaussRule& rule = gauss_legendre(kNormalizerNodes);
        for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
            const double mid = 0.5 * (breaks[iv] + breaks[iv + 1]);
            const double halfw = 0.5 * (breaks[iv + 1] - breaks[iv]);
            for (int g = 0; g < kNormalizerNodes; ++g) {
                qx_.push_back(mid + halfw * rule.nodes[g]);
                qw_.push_back(rule.weights[g] * halfw);
            }
        }
        qfirst_.resize(qx_.size());
        qb_.resize(qx_.size() * (m + 1));
        for (size_t i = 0; i < qx_.size(); ++i)
            qfirst_[i] = basis_.eval_local(qx_[i], 0, &qb_[i * (m + 1)]);
    } else if (std::holds_alternative<Hazard>(model_)) {
        const auto* surv = std::get_if<SurvivalData>(&data);
        if (!surv) throw std::invalid_argument("ModelEvaluator: hazard model expects survival data");
        if (surv->x.size() != surv->time.size() || surv->x.size() != surv->event.size())
            throw std::invalid_argument("ModelEvaluator: survival column length mismatch");
        xs_ = surv->x;
        times_ = surv->time;
        events_ = surv->event;
        cache_points(xs_);
    } else {
        const auto* per = std::get_if<PeriodogramData>(&data);
        if (!per)
            throw std::invalid_argument("ModelEvaluator: spectral model expects periodogram data");
        if (per->freq.size() != per->ordinate.size())
            throw std::invalid_argument("ModelEvaluator: periodogram column length mismatch");
        xs_ = per->freq;
        ys_ = per->ordinate;
        cache_points(xs_);
        norm_ = 1.0 / per->whittle_norm();
        wts_.resize(xs_.size());
        for (size_t k = 0; k < xs_.size(); ++k)
            wts_[k] = std::abs(xs_[k] - kPi) < 1e-9 ? -0.5 : -1.0;
    }
}

double ModelEvaluator::eta_at(size_t i, const VectorXd& c) const {
    const int m = basis_.degree();
    const double* b = &bval_[i * (m + 1)];
    double v = 0.0;
    for (int j = 0; j <= m; ++j) v += c[first_[i] + j] * b[j];
    return v;
}

double ModelEvaluator::log_normalizer(const VectorXd& c) const {
    // adaptive per knot interval on exp(h)
    const auto breaks = basis_.knots().breakpoints();
    SplineFunction h{basis_, c};
    double z = 0.0;
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv)
        z += adaptive_integrate([&](double x) { return std::exp(h.value(x)); }, breaks[iv],
                                breaks[iv + 1]);
    return std::log(z);
}

void ModelEvaluator::normalizer_moments(const VectorXd& c, double& z, VectorXd& mom1,
                                        MatrixXd* mom2) const {
    const int m = basis_.degree(), N = basis_.dim();
    z = 0.0;
    mom1 = VectorXd::Zero(N);
    if (mom2) *mom2 = MatrixXd::Zero(N, N);
    for (size_t i = 0; i < qx_.size(); ++i) {
        const double* b = &qb_[i * (m + 1)];
        const int first = qfirst_[i];
        double h = 0.0;
        for (int j = 0; j <= m; ++j) h += c[first + j] * b[j];
        const double w = qw_[i] * std::exp(h);
        z += w;
        for (int j = 0; j <= m; ++j) mom1[first + j] += w * b[j];
        if (mom2)
            for (int a = 0; a <= m; ++a)
                for (int bb = 0; bb <= m; ++bb)
                    (*mom2)(first + a, first + bb) += w * b[a] * b[bb];
    }
}

double ModelEvaluator::objective(const VectorXd& c) const {
    const size_t n = xs_.size();
    double acc = 0.0;

    if (std::holds_alternative<Gaussian>(model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double r = ys_[i] - eta_at(i, c);
            acc -= r * r;
        }
        return acc * norm_;
    }
    if (const auto* fam = std::get_if<ExpFamily>(&model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double h = eta_at(i, c);
            if (std::abs(h) > fam->eta_clamp) return kNegInf;
            acc += fam->B(h) * ys_[i] - fam->C(h);
        }
        return std::isfinite(acc) ? acc * norm_ : kNegInf;
    }
    if (std::holds_alternative<LogDensity>(model_)) {
        for (size_t i = 0; i < n; ++i) acc += eta_at(i, c);
        const double logz = log_normalizer(c);
        if (!std::isfinite(logz)) return kNegInf;
        const double v = acc * norm_ - logz;
        return std::isfinite(v) ? v : kNegInf;
    }
    if (std::holds_alternative<Hazard>(model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double h = eta_at(i, c);
            acc += h * (events_[i] ? 1.0 : 0.0) - times_[i] * std::exp(h);
        }
        return std::isfinite(acc) ? acc * norm_ : kNegInf;
    }
    if (const auto* q = std::get_if<Quantile>(&model_)) {
        for (size_t i = 0; i < n; ++i) acc -= check_loss(ys_[i] - eta_at(i, c), q->tau, q->eps);
        return acc * norm_;
    }
    const auto& sp = std::get<Spectral>(model_);
    (void)sp;
    for (size_t k = 0; k < n; ++k) {
        const double h = eta_at(k, c);
        acc += wts_[k] * (h + ys_[k] * std::exp(-h));
    }
    return std::isfinite(acc) ? acc * norm_ : kNegInf;
}

VectorXd ModelEvaluator::gradient(const VectorXd& c) const {
    const int m = basis_.degree(), N = basis_.dim();
    const size_t n = xs_.size();
    VectorXd g = VectorXd::Zero(N);

    auto accumulate = [&](size_t i, double factor) {
        const double* b = &bval_[i * (m + 1)];
        for (int j = 0; j <= m; ++j) g[first_[i] + j] += factor * b[j];
    };

    if (std::holds_alternative<Gaussian>(model_)) {
        for (size_t i = 0; i < n; ++i) accumulate(i, 2.0 * (ys_[i] - eta_at(i, c)));
    } else if (const auto* fam = std::get_if<ExpFamily>(&model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double h = eta_at(i, c);
            accumulate(i, fam->dB(h) * ys_[i] - fam->dC(h));
        }
    } else if (std::holds_alternative<LogDensity>(model_)) {
        double z;
        VectorXd mom1;
        normalizer_moments(c, z, mom1, nullptr);
        for (size_t i = 0; i < n; ++i) accumulate(i, 1.0);
        g *= norm_;
        return g - mom1 / z;
    } else if (std::holds_alternative<Hazard>(model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double h = eta_at(i, c);
            accumulate(i, (events_[i] ? 1.0 : 0.0) - times_[i] * std::exp(h));
        }
    } else if (const auto* q = std::get_if<Quantile>(&model_)) {
        for (size_t i = 0; i < n; ++i) accumulate(i, check_psi(ys_[i] - eta_at(i, c), q->tau, q->eps));
    } else {
        for (size_t k = 0; k < n; ++k) {
            const double h = eta_at(k, c);
            accumulate(k, wts_[k] * (1.0 - ys_[k] * std::exp(-h)));
        }
    }
    return g * norm_;
}

bool ModelEvaluator::has_curvature() const {
    if (const auto* q = std::get_if<Quantile>(&model_)) return q->eps > 0.0;
    return true;
}

MatrixXd ModelEvaluator::curvature(const VectorXd& c) const {
    const int m = basis_.degree(), N = basis_.dim();
    const size_t n = xs_.size();
    MatrixXd H = MatrixXd::Zero(N, N);

    auto accumulate = [&](size_t i, double factor) {
        const double* b = &bval_[i * (m + 1)];
        const int first = first_[i];
        for (int a = 0; a <= m; ++a)
            for (int bb = 0; bb <= m; ++bb) H(first + a, first + bb) += factor * b[a] * b[bb];
    };

    if (std::holds_alternative<Gaussian>(model_)) {
        for (size_t i = 0; i < n; ++i) accumulate(i, -2.0);
    } else if (const auto* fam = std::get_if<ExpFamily>(&model_)) {
        for (size_t i = 0; i < n; ++i) {
            const double h = eta_at(i, c);
            accumulate(i, fam->d2B(h) * ys_[i] - fam->d2C(h));
        }
    } else if (std::holds_alternative<LogDensity>(model_)) {
        double z;
        VectorXd mom1;
        MatrixXd mom2;
        normalizer_moments(c, z, mom1, &mom2);
        const VectorXd mu = mom1 / z;
        return -(mom2 / z - mu * mu.transpose());
    } else if (std::holds_alternative<Hazard>(model_)) {
        for (size_t i = 0; i < n; ++i)
            accumulate(i, -times_[i] * std::exp(eta_at(i, c)));
    } else if (const auto* q = std::get_if<Quantile>(&model_)) {
        if (q->eps <= 0.0)
            throw std::invalid_argument(
                "curvature: unsmoothed check loss has no Hessian; use the eps homotopy");
        for (size_t i = 0; i < n; ++i)
            accumulate(i, -check_psi2(ys_[i] - eta_at(i, c), q->tau, q->eps));
    } else {
        for (size_t k = 0; k < n; ++k)
            accumulate(k, wts_[k] * ys_[k] * std::exp(-eta_at(k, c)));
    }
    return H * norm_;
}

double objective(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                 const VectorXd& coeffs) {
    return ModelEvaluator(model, data, basis).objective(coeffs);
}

VectorXd gradient(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                  const VectorXd& coeffs) {
    return ModelEvaluator(model, data, basis).gradient(coeffs);
}

MatrixXd curvature(const ModelSpec& model, const Dataset& data, const BasisSpec& basis,
                   const VectorXd& coeffs) {
    return ModelEvaluator(model, data, basis).curvature(coeffs);
}

ConstraintSpec constraints_from_rows(const MatrixXd& rows) {
    const int N = static_cast<int>(rows.cols());
    Eigen::JacobiSVD<MatrixXd> svd(rows, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol =
        std::max(rows.rows(), rows.cols()) * Eigen::NumTraits<double>::epsilon() *
        (sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    ConstraintSpec spec;
    spec.rows = rows;
    spec.nullbasis = svd.matrixV().rightCols(N - rank);
    return spec;
}

ConstraintSpec zero_integral_constraint(const BasisSpec& basis) {
    const int N = basis.dim(), m = basis.degree();
    MatrixXd row = MatrixXd::Zero(1, N);
    const auto breaks = basis.knots().breakpoints();
    const int nodes = (m + 2) / 2 + 1;
    const GaussRule& rule = gauss_legendre(nodes);
    std::vector<double> vals(m + 1);
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        const double mid = 0.5 * (breaks[iv] + breaks[iv + 1]);
        const double halfw = 0.5 * (breaks[iv + 1] - breaks[iv]);
        for (int g = 0; g < nodes; ++g) {
            const double x = mid + halfw * rule.nodes[g];
            const int first = basis.eval_local(x, 0, vals.data());
            for (int j = 0; j <= m; ++j) row(0, first + j) += rule.weights[g] * halfw * vals[j];
        }
    }
    return constraints_from_rows(row);
}

ConstraintSpec spectral_boundary_constraints(const BasisSpec& basis) {
    if (basis.degree() < 3)
        throw std::invalid_argument(
            "spectral_boundary_constraints: third derivatives need degree >= 3");
    const int N = basis.dim();
    MatrixXd rows = MatrixXd::Zero(4, N);
    const double lo = basis.knots().lo, hi = basis.knots().hi;
    rows.row(0) = basis.eval(lo, 1).transpose();
    rows.row(1) = basis.eval(lo, 3).transpose();
    rows.row(2) = basis.eval(hi, 1).transpose();
    rows.row(3) = basis.eval(hi, 3).transpose();
    return constraints_from_rows(rows);
}

}  // namespace penspline
