#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

// Deterministic scalar kernels shared by all bound evaluations: log-gamma,
// regularized incomplete gamma, binomial laws in log domain, chi-square
// tails, the Gaussian quadratic-form MGF, and scalar optimizers.
//
// Everything here is pure and reentrant.

namespace uma {

// Search interval for the scalar optimizers. tolerance is absolute, on the
// argument.
struct ScalarSearchSpec {
    double lower = 0.0;
    double upper = 1.0;
    double tolerance = 1e-9;
    int max_iterations = 200;
};

// ln Gamma(x), x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

// Regularized upper incomplete gamma Q(a, y) = Gamma(a, max{y,0}) / Gamma(a).
// The clamp at y < 0 is deliberate: probability expressions feeding this can
// produce negative thresholds and must cap at 1.
double upper_incomplete_gamma_reg(double a, double y);

// Regularized lower incomplete gamma P(a, y) = 1 - Q(a, y).
double lower_incomplete_gamma_reg(double a, double y);

// ln C(n, k) for real n >= k >= 0 (n may be non-integer; used with n carried
// as a real when message-set sizes exceed integer range).
double log_binomial_coeff(double n, double k);

// Binomial pmf C(n,k) p^k (1-p)^(n-k), computed in log domain so it survives
// n of order 1e5. k outside [0, n] gives 0.
double binomial_pmf(long long k, long long n, double p);
double log_binomial_pmf(long long k, long long n, double p);

// E[exp(-gamma ||X||^2)] for X ~ N(mu, sigma_sq I_n) with ||mu||^2 =
// mu_norm_sq. Requires gamma > -1/(2 sigma_sq).
double gaussian_quadratic_mgf(int n, double mu_norm_sq, double sigma_sq, double gamma);

// P[||X||^2 > y] for X ~ N(0, I_n); callers rescale y for other variances.
double chi_square_tail(int n, double y);

// Regularized incomplete beta I_x(a, b). Needed by the Clopper-Pearson
// confidence bounds.
double regularized_incomplete_beta(double a, double b, double x);

// One-sided Clopper-Pearson bounds for a binomial proportion with `hits`
// successes in `n` trials at the given confidence level.
double binomial_upper_confidence(long long hits, long long n, double confidence);
double binomial_lower_confidence(long long hits, long long n, double confidence);

struct ScalarMinResult {
    double argmin = 0.0;
    double min = 0.0;
};

// Golden-section minimization. For unimodal f the result is within
// spec.tolerance of the true minimizer; for general f it is a local minimum
// no worse than f at both endpoints. Non-finite f evaluations propagate as
// std::runtime_error.
template <typename F>
ScalarMinResult golden_section_min_t(F&& f, const ScalarSearchSpec& spec) {
    if (!(spec.lower < spec.upper) || !(spec.tolerance > 0) || spec.max_iterations < 1)
        throw std::invalid_argument("golden_section_min: bad search spec");
    constexpr double inv_phi = 0.6180339887498949;
    double a = spec.lower, b = spec.upper;
    auto eval = [&](double x) {
        double v = f(x);
        if (!(v == v)) throw std::runtime_error("golden_section_min: non-finite objective");
        return v;
    };
    double fa = eval(a), fb = eval(b);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < spec.max_iterations && (b - a) > spec.tolerance; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
    }
    double xm = 0.5 * (a + b);
    double fm = eval(xm);
    ScalarMinResult best{xm, fm};
    if (f1 < best.min) best = {x1, f1};
    if (f2 < best.min) best = {x2, f2};
    if (fa < best.min) best = {spec.lower, fa};
    if (fb < best.min) best = {spec.upper, fb};
    return best;
}

ScalarMinResult golden_section_min(const std::function<double(double)>& f,
                                   const ScalarSearchSpec& spec);

// Smallest x in [lower, upper] (within tol) with predicate(x) true, for a
// predicate that is false below a threshold and true above. Throws
// std::runtime_error if predicate(upper) is false.
double bisection_min_feasible(const std::function<bool(double)>& predicate, double lower,
                              double upper, double tol);

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace uma
