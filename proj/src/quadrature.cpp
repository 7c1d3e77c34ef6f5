#include "penspline/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace penspline {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence for P_n(x) and P'_n(x)
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: node count must be >= 1");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n) {
    const GaussRule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + halfw * rule.nodes[i]);
    return sum * halfw;
}

namespace {

constexpr int kAdaptiveNodes = 10;

double adaptive_rec(const std::function<double(double)>& f, double a, double b, double whole,
                    double rel_tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_integrate(f, a, mid, kAdaptiveNodes);
    const double right = gauss_integrate(f, mid, b, kAdaptiveNodes);
    const double refined = left + right;
    if (depth <= 0 || std::abs(refined - whole) <= rel_tol * std::max(std::abs(refined), 1e-300))
        return refined;
    return adaptive_rec(f, a, mid, left, rel_tol, depth - 1) +
           adaptive_rec(f, mid, b, right, rel_tol, depth - 1);
}

Eigen::VectorXd adaptive_rec_vec(const std::function<Eigen::VectorXd(double)>& f, double a,
                                 double b, const Eigen::VectorXd& whole, double rel_tol,
                                 int depth) {
    const double mid = 0.5 * (a + b);
    const GaussRule& rule = gauss_legendre(kAdaptiveNodes);
    auto panel = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(whole.size());
        for (int i = 0; i < kAdaptiveNodes; ++i)
            acc += rule.weights[i] * f(c + h * rule.nodes[i]);
        return Eigen::VectorXd(acc * h);
    };
    Eigen::VectorXd left = panel(a, mid);
    Eigen::VectorXd right = panel(mid, b);
    Eigen::VectorXd refined = left + right;
    const double err = (refined - whole).cwiseAbs().maxCoeff();
    const double scale = std::max(refined.cwiseAbs().maxCoeff(), 1e-300);
    if (depth <= 0 || err <= rel_tol * scale) return refined;
    return adaptive_rec_vec(f, a, mid, left, rel_tol, depth - 1) +
           adaptive_rec_vec(f, mid, b, right, rel_tol, depth - 1);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, int max_depth) {
    if (!(a <= b)) throw std::invalid_argument("adaptive_integrate: requires a <= b");
    if (a == b) return 0.0;
    const double whole = gauss_integrate(f, a, b, kAdaptiveNodes);
    return adaptive_rec(f, a, b, whole, rel_tol, max_depth);
}

Eigen::VectorXd adaptive_integrate_vec(const std::function<Eigen::VectorXd(double)>& f, double a,
                                       double b, int dim, double rel_tol, int max_depth) {
    if (!(a <= b)) throw std::invalid_argument("adaptive_integrate_vec: requires a <= b");
    if (a == b) return Eigen::VectorXd::Zero(dim);
    const GaussRule& rule = gauss_legendre(kAdaptiveNodes);
    const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);
    Eigen::VectorXd whole = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < kAdaptiveNodes; ++i)
        whole += rule.weights[i] * f(mid + halfw * rule.nodes[i]);
    whole *= halfw;
    return adaptive_rec_vec(f, a, b, whole, rel_tol, max_depth);
}

double integrate_over_breaks(const std::function<double(double)>& f,
                             const std::vector<double>& breaks, double rel_tol, int max_depth) {
    double sum = 0.0;
    for (size_t i = 0; i + 1 < breaks.size(); ++i)
        sum += adaptive_integrate(f, breaks[i], breaks[i + 1], rel_tol, max_depth);
    return sum;
}

}  // namespace penspline
