#include "uma/special_math.hpp"

#include <cmath>
#include <limits>

namespace uma {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// Lanczos-style coefficients (Numerical Recipes, 14-term), relative error
// well below 1e-13 over the required range.
double log_gamma_impl(double x) {
    static const double cof[14] = {
        57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
        -0.491913816097620199,   0.339946499848118887e-4, 0.465236289270485756e-4,
        -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
        0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
        -0.261908384015814087e-4, 0.368991826595316234e-5};
    double y = x;
    double tmp = x + 5.24218750000000000;
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (int j = 0; j < 14; ++j) ser += cof[j] / ++y;
    return tmp + std::log(2.5066282746310005 * ser / x);
}

// Series for P(a, x), valid (and fast) for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 10000; ++i) {
        ++ap;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - log_gamma_impl(a));
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_impl(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma_impl(a)) * h;
}

// Lentz continued fraction for the incomplete beta.
double beta_cf(double a, double b, double x) {
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) break;
    }
    return h;
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: x must be positive");
    return log_gamma_impl(x);
}

double lower_incomplete_gamma_reg(double a, double y) {
    if (!(a > 0.0)) throw std::domain_error("incomplete gamma: a must be positive");
    if (y <= 0.0) return 0.0;
    if (y < a + 1.0) return gamma_p_series(a, y);
    return 1.0 - gamma_q_cf(a, y);
}

double upper_incomplete_gamma_reg(double a, double y) {
    if (!(a > 0.0)) throw std::domain_error("incomplete gamma: a must be positive");
    if (y <= 0.0) return 1.0;
    if (y < a + 1.0) return 1.0 - gamma_p_series(a, y);
    return gamma_q_cf(a, y);
}

double log_binomial_coeff(double n, double k) {
    if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
    if (k == 0.0 || k == n) return 0.0;
    return log_gamma_impl(n + 1.0) - log_gamma_impl(k + 1.0) - log_gamma_impl(n - k + 1.0);
}

double log_binomial_pmf(long long k, long long n, double p) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
    double kk = static_cast<double>(k), nn = static_cast<double>(n);
    return log_binomial_coeff(nn, kk) + kk * std::log(p) + (nn - kk) * std::log1p(-p);
}

double binomial_pmf(long long k, long long n, double p) {
    double lp = log_binomial_pmf(k, n, p);
    return lp == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(lp);
}

double gaussian_quadratic_mgf(int n, double mu_norm_sq, double sigma_sq, double gamma) {
    double denom = 1.0 + 2.0 * gamma * sigma_sq;
    if (!(denom > 0.0)) throw std::domain_error("gaussian_quadratic_mgf: gamma at or below pole");
    return std::exp(-0.5 * n * std::log(denom) - gamma * mu_norm_sq / denom);
}

double chi_square_tail(int n, double y) {
    if (n < 1) throw std::domain_error("chi_square_tail: n must be >= 1");
    return upper_incomplete_gamma_reg(0.5 * n, 0.5 * y);
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete beta: bad shape");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double front =
        std::exp(log_gamma_impl(a + b) - log_gamma_impl(a) - log_gamma_impl(b) +
                 a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double binomial_upper_confidence(long long hits, long long n, double confidence) {
    if (n <= 0) return 1.0;
    if (hits >= n) return 1.0;
    if (hits < 0) hits = 0;
    // Smallest p with P[Bin(n,p) <= hits] <= 1 - confidence, i.e. the
    // Beta(hits+1, n-hits) quantile at `confidence`.
    double a = static_cast<double>(hits) + 1.0, b = static_cast<double>(n - hits);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(a, b, mid) < confidence)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

double binomial_lower_confidence(long long hits, long long n, double confidence) {
    if (n <= 0 || hits <= 0) return 0.0;
    if (hits > n) hits = n;
    double a = static_cast<double>(hits), b = static_cast<double>(n - hits) + 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(a, b, mid) < 1.0 - confidence)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

ScalarMinResult golden_section_min(const std::function<double(double)>& f,
                                   const ScalarSearchSpec& spec) {
    return golden_section_min_t(f, spec);
}

double bisection_min_feasible(const std::function<bool(double)>& predicate, double lower,
                              double upper, double tol) {
    if (!(lower <= upper)) throw std::invalid_argument("bisection_min_feasible: bad bracket");
    if (!predicate(upper)) throw std::runtime_error("bisection_min_feasible: infeasible at upper bracket");
    if (predicate(lower)) return lower;
    double lo = lower, hi = upper;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (predicate(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace uma
