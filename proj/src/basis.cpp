#include "penspline/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "penspline/quadrature.hpp"
#include "penspline/rng.hpp"

namespace penspline {

KnotVector::KnotVector(double a, double b, std::vector<double> inner, double bound)
    : lo(a), hi(b), interior(std::move(inner)), ratio_bound(bound) {
    validate();
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> breaks;
    breaks.reserve(interior.size() + 2);
    breaks.push_back(lo);
    breaks.insert(breaks.end(), interior.begin(), interior.end());
    breaks.push_back(hi);
    return breaks;
}

double KnotVector::max_gap() const {
    auto breaks = breakpoints();
    double g = 0.0;
    for (size_t i = 0; i + 1 < breaks.size(); ++i) g = std::max(g, breaks[i + 1] - breaks[i]);
    return g;
}

double KnotVector::min_gap() const {
    auto breaks = breakpoints();
    double g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < breaks.size(); ++i) g = std::min(g, breaks[i + 1] - breaks[i]);
    return g;
}

void KnotVector::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("KnotVector: requires lo < hi");
    if (!(ratio_bound >= 1.0)) throw std::invalid_argument("KnotVector: mesh ratio bound < 1");
    double prev = lo;
    for (double t : interior) {
        if (!(t > prev)) throw std::invalid_argument("KnotVector: interior knots not increasing");
        prev = t;
    }
    if (!interior.empty() && !(interior.back() < hi))
        throw std::invalid_argument("KnotVector: interior knot outside (lo, hi)");
    if (mesh_ratio() > ratio_bound * (1.0 + 1e-12))
        throw std::invalid_argument("KnotVector: mesh ratio exceeds declared bound");
}

KnotVector make_knots(double a, double b, int k, KnotScheme scheme, double ratio_bound,
                      std::uint64_t seed) {
    if (!(a < b)) throw std::invalid_argument("make_knots: requires a < b");
    if (k < 0) throw std::invalid_argument("make_knots: negative knot count");
    if (!(ratio_bound >= 1.0)) throw std::invalid_argument("make_knots: ratio bound < 1");

    std::vector<double> interior(k);
    if (scheme == KnotScheme::Equal || k == 0) {
        const double h = (b - a) / (k + 1);
        for (int j = 0; j < k; ++j) interior[j] = a + (j + 1) * h;
    } else {
        // gaps drawn in [1, ratio_bound] keep the mesh ratio inside the bound
        Rng rng(seed);
        std::vector<double> gaps(k + 1);
        double total = 0.0;
        for (double& g : gaps) {
            g = 1.0 + (ratio_bound - 1.0) * rng.uniform();
            total += g;
        }
        double acc = a;
        for (int j = 0; j < k; ++j) {
            acc += gaps[j] / total * (b - a);
            interior[j] = acc;
        }
    }
    return KnotVector(a, b, std::move(interior), std::max(ratio_bound, 1.0 + 1e-12));
}

BasisSpec::BasisSpec(KnotVector knots, int degree) : knots_(std::move(knots)), degree_(degree) {
    knots_.validate();
    if (degree_ < 0) throw std::invalid_argument("BasisSpec: negative degree");
    const int k = knots_.count();
    dim_ = degree_ + k + 1;
    ext_.reserve(dim_ + degree_ + 1);
    for (int i = 0; i <= degree_; ++i) ext_.push_back(knots_.lo);
    for (double t : knots_.interior) ext_.push_back(t);
    for (int i = 0; i <= degree_; ++i) ext_.push_back(knots_.hi);
}

int BasisSpec::find_span(double x) const {
    if (x < knots_.lo || x > knots_.hi)
        throw std::domain_error("BasisSpec: evaluation point outside the domain");
    if (x >= ext_[dim_]) return dim_ - 1;
    if (x <= ext_[degree_]) return degree_;
    int low = degree_, high = dim_, mid = (low + high) / 2;
    while (x < ext_[mid] || x >= ext_[mid + 1]) {
        if (x < ext_[mid])
            high = mid;
        else
            low = mid;
        mid = (low + high) / 2;
    }
    return mid;
}

int BasisSpec::eval_local(double x, int deriv, double* out) const {
    if (deriv < 0) throw std::invalid_argument("BasisSpec: negative derivative order");
    if (deriv > degree_)
        throw std::invalid_argument("BasisSpec: derivative order exceeds the spline degree");
    const int p = degree_;
    const int span = find_span(x);

    // Triangular table of basis values and knot differences (de Boor).
    std::vector<double> ndu((p + 1) * (p + 1));
    auto NDU = [&](int i, int j) -> double& { return ndu[i * (p + 1) + j]; };
    std::vector<double> left(p + 1), right(p + 1);
    NDU(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - ext_[span + 1 - j];
        right[j] = ext_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            NDU(j, r) = right[r + 1] + left[j - r];
            const double temp = NDU(r, j - 1) / NDU(j, r);
            NDU(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        NDU(j, j) = saved;
    }
    if (deriv == 0) {
        for (int j = 0; j <= p; ++j) out[j] = NDU(j, p);
        return span - p;
    }

    std::vector<double> ders(p + 1);
    std::vector<double> a(2 * (p + 1));
    auto A = [&](int i, int j) -> double& { return a[i * (p + 1) + j]; };
    const int n = deriv;
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        A(0, 0) = 1.0;
        double d = 0.0;
        for (int kk = 1; kk <= n; ++kk) {
            d = 0.0;
            const int rk = r - kk, pk = p - kk;
            if (r >= kk) {
                A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
                d = A(s2, 0) * NDU(rk, pk);
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
                d += A(s2, j) * NDU(rk + j, pk);
            }
            if (r <= pk) {
                A(s2, kk) = -A(s1, kk - 1) / NDU(pk + 1, r);
                d += A(s2, kk) * NDU(r, pk);
            }
            std::swap(s1, s2);
        }
        ders[r] = d;
    }
    double factor = p;
    for (int kk = 2; kk <= n; ++kk) factor *= (p - kk + 1);
    for (int j = 0; j <= p; ++j) out[j] = ders[j] * factor;
    return span - p;
}

std::vector<double> BasisSpec::greville_sites() const {
    std::vector<double> sites(dim_);
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int j = 1; j <= degree_; ++j) s += ext_[i + j];
        sites[i] = degree_ > 0 ? s / degree_ : 0.5 * (ext_[i] + ext_[i + 1]);
    }
    return sites;
}

VectorXd BasisSpec::eval(double x, int deriv) const {
    VectorXd dense = VectorXd::Zero(dim_);
    std::vector<double> local(degree_ + 1);
    const int first = eval_local(x, deriv, local.data());
    for (int j = 0; j <= degree_; ++j) dense[first + j] = local[j];
    return dense;
}

double SplineFunction::value(double x, int deriv) const {
    std::vector<double> local(basis.degree() + 1);
    const int first = basis.eval_local(x, deriv, local.data());
    double v = 0.0;
    for (int j = 0; j <= basis.degree(); ++j) v += coeffs[first + j] * local[j];
    return v;
}

MatrixXd l2_gram(const BasisSpec& basis, const Weight& w) {
    const int N = basis.dim(), m = basis.degree();
    MatrixXd G = MatrixXd::Zero(N, N);
    const auto breaks = basis.knots().breakpoints();
    std::vector<double> vals(m + 1);

    if (w.degree >= 0) {
        const int nodes = (2 * m + w.degree + 2) / 2;  // exact for polynomial w
        const GaussRule& rule = gauss_legendre(nodes);
        for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
            const double mid = 0.5 * (breaks[iv] + breaks[iv + 1]);
            const double halfw = 0.5 * (breaks[iv + 1] - breaks[iv]);
            for (int g = 0; g < nodes; ++g) {
                const double x = mid + halfw * rule.nodes[g];
                const double wv = w.f(x);
                if (!(wv > 0.0))
                    throw std::runtime_error("l2_gram: nonpositive weight at quadrature node");
                const double wt = rule.weights[g] * halfw * wv;
                const int first = basis.eval_local(x, 0, vals.data());
                for (int a = 0; a <= m; ++a)
                    for (int b = 0; b <= m; ++b)
                        G(first + a, first + b) += wt * vals[a] * vals[b];
            }
        }
        return G;
    }

    // non-polynomial weight: adaptive per interval on the local products
    const int d = (m + 1) * (m + 1);
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        const double x0 = breaks[iv], x1 = breaks[iv + 1];
        const int first = basis.find_span(0.5 * (x0 + x1)) - m;
        auto integrand = [&](double x) {
            std::vector<double> v(m + 1);
            basis.eval_local(x, 0, v.data());
            const double wv = w.f(x);
            if (!(wv > 0.0))
                throw std::runtime_error("l2_gram: nonpositive weight at quadrature node");
            Eigen::VectorXd outer(d);
            for (int a = 0; a <= m; ++a)
                for (int b = 0; b <= m; ++b) outer[a * (m + 1) + b] = wv * v[a] * v[b];
            return outer;
        };
        Eigen::VectorXd block = adaptive_integrate_vec(integrand, x0, x1, d);
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b) G(first + a, first + b) += block[a * (m + 1) + b];
    }
    return G;
}

Projection best_l2_projection(const BasisSpec& basis, const std::function<double(double)>& f,
                              const Weight& w) {
    const int N = basis.dim(), m = basis.degree();
    const MatrixXd G = l2_gram(basis, w);
    Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("best_l2_projection: gram matrix not positive definite");

    VectorXd rhs = VectorXd::Zero(N);
    const auto breaks = basis.knots().breakpoints();
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        const double x0 = breaks[iv], x1 = breaks[iv + 1];
        const int first = basis.find_span(0.5 * (x0 + x1)) - m;
        auto integrand = [&](double x) {
            Eigen::VectorXd v(m + 1);
            basis.eval_local(x, 0, v.data());
            return Eigen::VectorXd(v * (f(x) * w.f(x)));
        };
        rhs.segment(first, m + 1) += adaptive_integrate_vec(integrand, x0, x1, m + 1);
    }

    SplineFunction proj{basis, llt.solve(rhs)};
    double err2 = 0.0;
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        auto sq = [&](double x) {
            const double d = proj.value(x) - f(x);
            return d * d * w.f(x);
        };
        err2 += adaptive_integrate(sq, breaks[iv], breaks[iv + 1]);
    }
    return Projection{std::move(proj), std::sqrt(std::max(err2, 0.0))};
}

double complexity_constant(const BasisSpec& basis, int grid_density) {
    if (grid_density < 16)
        throw std::invalid_argument("complexity_constant: grid density must be >= 16");
    const int N = basis.dim(), m = basis.degree();
    Eigen::LLT<MatrixXd> llt(l2_gram(basis));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("complexity_constant: gram matrix not positive definite");

    const auto breaks = basis.knots().breakpoints();
    std::vector<double> vals(m + 1);
    VectorXd b = VectorXd::Zero(N);
    double best = 0.0;
    for (size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
        for (int g = 0; g < grid_density; ++g) {
            const double t = static_cast<double>(g) / (grid_density - 1);
            const double x = breaks[iv] + t * (breaks[iv + 1] - breaks[iv]);
            const int first = basis.eval_local(x, 0, vals.data());
            b.setZero();
            for (int j = 0; j <= m; ++j) b[first + j] = vals[j];
            best = std::max(best, b.dot(llt.solve(b)));
        }
    }
    return std::sqrt(best);
}

double empirical_norm_ratio(const BasisSpec& basis, const std::vector<double>& sample,
                            const Weight& design_density, int trials, std::uint64_t seed,
                            const std::vector<double>* sample_weights) {
    if (sample.empty()) throw std::invalid_argument("empirical_norm_ratio: empty sample");
    if (sample_weights && sample_weights->size() != sample.size())
        throw std::invalid_argument("empirical_norm_ratio: weight/sample size mismatch");
    const int N = basis.dim(), m = basis.degree();

    const MatrixXd G = l2_gram(basis, design_density);
    MatrixXd Gn = MatrixXd::Zero(N, N);
    std::vector<double> vals(m + 1);
    const double unif = 1.0 / static_cast<double>(sample.size());
    for (size_t i = 0; i < sample.size(); ++i) {
        const double wt = sample_weights ? (*sample_weights)[i] : unif;
        const int first = basis.eval_local(sample[i], 0, vals.data());
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b) Gn(first + a, first + b) += wt * vals[a] * vals[b];
    }

    Rng rng(seed);
    double dev = 0.0;
    VectorXd c(N);
    for (int t = 0; t < trials; ++t) {
        for (int j = 0; j < N; ++j) c[j] = rng.normal();
        const double ratio = std::sqrt(c.dot(Gn * c) / c.dot(G * c));
        dev = std::max(dev, std::abs(ratio - 1.0));
    }
    return dev;
}

}  // namespace penspline
