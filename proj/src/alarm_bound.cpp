#include "uma/alarm_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace uma {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Gauss-Legendre nodes/weights on [0,1], computed once by Newton iteration.
struct GaussLegendre {
    std::vector<double> x, w;
    explicit GaussLegendre(int n) {
        x.resize(n);
        w.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p1 = 1.0, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
                }
                pp = n * (z * p1 - p2) / (z * z - 1.0);
                double z1 = z;
                z = z1 - p1 / pp;
                if (std::fabs(z - z1) < 1e-15) break;
            }
            x[i] = 0.5 * (1.0 - z);
            x[n - 1 - i] = 0.5 * (1.0 + z);
            w[i] = 1.0 / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
    }
};

const GaussLegendre& gl256() {
    static const GaussLegendre g(256);
    return g;
}

const GaussLegendre& gl64() {
    static const GaussLegendre g(64);
    return g;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double likelihood_metric_alarm(double y_norm_sq, double k, int n_a, double P_a) {
    double v = 1.0 + k * k * P_a;
    return -0.5 * n_a * (kLog2Pi + std::log(v)) - y_norm_sq / (2.0 * v);
}

double prob_metric_greater(int n, double var_target, double var_other, double sigma2) {
    if (var_target == var_other) return 0.0;  // equal metrics, strict inequality impossible
    double t = static_cast<double>(n) * (std::log(var_target) - std::log(var_other)) /
               (1.0 / var_other - 1.0 / var_target);
    if (var_target < var_other) return lower_incomplete_gamma_reg(0.5 * n, t / (2.0 * sigma2));
    return upper_incomplete_gamma_reg(0.5 * n, t / (2.0 * sigma2));
}

double zeta_core(int k_a, int k_a_prime, int n_dim, double P_a, double P_a_prime,
                 int k_lower, int k_upper, double interference_power) {
    double sigma2 = 1.0 + static_cast<double>(k_a) * k_a * P_a_prime + interference_power;
    double v_target = 1.0 + static_cast<double>(k_a_prime) * k_a_prime * P_a;
    double best = 1.0;
    bool any = false;
    auto consider = [&](long long k) {
        if (k == k_a_prime) return;
        double v = 1.0 + static_cast<double>(k) * k * P_a;
        best = std::min(best, prob_metric_greater(n_dim, v_target, v, sigma2));
        any = true;
    };
    consider(0);
    for (long long k = k_lower; k <= k_upper; ++k) consider(k);
    if (!any) throw std::runtime_error("zeta: empty competitor set");
    return best;
}

double zeta(int k_a, int k_a_prime, const AlarmBlockParams& params) {
    return zeta_core(k_a, k_a_prime, params.n_a, params.P_a, params.P_a_prime,
                     params.k_a_lower, params.k_a_upper, 0.0);
}

double generalized_info_density(double s, double k_a, double k_hat_a, double x, double y,
                                double P_a_prime) {
    double denom = 1.0 + 2.0 * s * k_hat_a * k_hat_a * P_a_prime;
    double d = y - k_a * x;
    return -s * d * d + s * y * y / denom + 0.5 * std::log(denom);
}

double s_star_init(double k_a, double k_hat_a, double P_a_prime) {
    if (k_hat_a < 1.0 || P_a_prime <= 0.0) return 0.25;
    double kh2 = k_hat_a * k_hat_a;
    double disc = std::sqrt(kh2 * kh2 * P_a_prime * P_a_prime +
                            4.0 * k_a * k_a * P_a_prime + 4.0);
    return 0.25 + (disc - 2.0) / (4.0 * kh2 * P_a_prime);
}

// ---------------------------------------------------------------------------
// gamma_amd: Monte Carlo over the shared pool + Chernoff cap
// ---------------------------------------------------------------------------

namespace {

struct AmdGeometry {
    double noise_var;   // Var(Y_i | X_i)
    double kappa;       // k_a sqrt(P') / sqrt(noise_var)
    double q_hat;       // k_hat^2 P'
    int n_dim;
    double log_ma_m1;   // ln(M_a - 1)
};

// Counts pool samples with sum_i i_s <= ln((M_a-1)/V). Integer reduction, so
// the result is independent of the chunking.
std::uint64_t count_amd_hits(const AmdGeometry& g, double s, const RcusSamplePool& pool,
                             std::uint64_t n_use, int workers) {
    double denom = 1.0 + 2.0 * s * g.q_hat;
    double c0 = 0.5 * g.n_dim * std::log(denom);
    double sv = s * g.noise_var;
    double k1 = 2.0 * g.kappa, k2 = g.kappa * g.kappa;
    auto count_range = [&](std::uint64_t lo, std::uint64_t hi) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = lo; i < hi; ++i) {
            double A = pool.a[i];
            double B = A + k1 * pool.ga[i] + k2 * pool.q2[i];
            double S = -sv * A + sv * B / denom + c0;
            if (S + static_cast<double>(pool.log_v[i]) <= g.log_ma_m1) ++hits;
        }
        return hits;
    };
    if (workers <= 1 || n_use < 1u << 18) return count_range(0, n_use);
    int nw = std::min<int>(workers, 8);
    std::vector<std::uint64_t> partial(nw, 0);
    std::vector<std::thread> threads;
    std::uint64_t per = (n_use + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
        std::uint64_t lo = std::min<std::uint64_t>(n_use, w * per);
        std::uint64_t hi = std::min<std::uint64_t>(n_use, lo + per);
        threads.emplace_back([&, w, lo, hi] { partial[w] = count_range(lo, hi); });
    }
    for (auto& t : threads) t.join();
    std::uint64_t total = 0;
    for (auto h : partial) total += h;
    return total;
}

// ln E[exp(-lambda i_s)] per symbol, or +inf when the Gaussian integral
// diverges. z ~ N(0, noise_var), u ~ N(0, q) with q = k_a^2 P'.
double log_m1_chernoff(double lam, double s, double q, double noise_var, double q_hat) {
    double denom = 1.0 + 2.0 * s * q_hat;
    double c = lam * s / denom;
    double m11 = 2.0 * (c - lam * s);
    double m12 = 2.0 * c;
    double m22 = 2.0 * c;
    // positive definiteness of Sigma^-1 + M
    double n11 = 1.0 / noise_var + m11;
    if (q > 0.0) {
        double n22 = 1.0 / q + m22;
        double det_n = n11 * n22 - m12 * m12;
        if (!(n11 > 0.0) || !(det_n > 0.0)) return std::numeric_limits<double>::infinity();
        double det = (1.0 + noise_var * m11) * (1.0 + q * m22) - noise_var * q * m12 * m12;
        return -0.5 * lam * std::log(denom) - 0.5 * std::log(det);
    }
    if (!(n11 > 0.0)) return std::numeric_limits<double>::infinity();
    return -0.5 * lam * std::log(denom) - 0.5 * std::log1p(noise_var * m11);
}

}  // namespace

double gamma_amd_chernoff(int k_a, int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                          double noise_var) {
    if (M_a <= 1) return 0.0;
    double q = static_cast<double>(k_a) * k_a * P_a_prime;
    double q_hat = static_cast<double>(k_hat_a) * k_hat_a * P_a_prime;
    double tau = std::log(static_cast<double>(M_a - 1));
    double s_init = s_star_init(k_a, k_hat_a, P_a_prime / noise_var) / noise_var;
    auto cap_at_s = [&](double s) {
        ScalarSearchSpec lspec{1e-6, 1.0 - 1e-9, 1e-6, 120};
        auto obj = [&](double lam) {
            double lm1 = log_m1_chernoff(lam, s, q, noise_var, q_hat);
            if (!std::isfinite(lm1)) return 1e12;
            return lam * tau - std::log1p(-lam) + n_dim * lm1;
        };
        return golden_section_min_t(obj, lspec).min;
    };
    ScalarSearchSpec sspec{s_init / 8.0, s_init * 8.0, s_init * 1e-5, 120};
    double best = golden_section_min_t([&](double s) { return cap_at_s(s); }, sspec).min;
    return clamp01(std::exp(std::min(0.0, best)));
}

GammaAmdValue gamma_amd_core(int k_a, int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                             double noise_var, const McSettings& mc, const RcusSamplePool& pool,
                             double skip_threshold) {
    GammaAmdValue out;
    if (M_a <= 1) {
        out = GammaAmdValue{0.0, 0.0, 0.0, 0.0, 0.25, 0, 0};
        return out;
    }
    out.chernoff = gamma_amd_chernoff(k_a, k_hat_a, n_dim, P_a_prime, M_a, noise_var);
    if (out.chernoff <= skip_threshold) {
        out.value = out.chernoff;
        out.upper = out.chernoff;
        out.mean = out.chernoff;
        return out;
    }
    if (pool.n_dim != n_dim || pool.size() == 0)
        throw std::invalid_argument("gamma_amd: pool dimension mismatch");

    AmdGeometry g;
    g.noise_var = noise_var;
    g.kappa = k_a * std::sqrt(P_a_prime / noise_var);
    g.q_hat = static_cast<double>(k_hat_a) * k_hat_a * P_a_prime;
    g.n_dim = n_dim;
    g.log_ma_m1 = std::log(static_cast<double>(M_a - 1));

    std::uint64_t n_pool = std::min<std::uint64_t>(pool.size(), mc.samples);
    std::uint64_t n_probe = std::min<std::uint64_t>(n_pool, 1u << 14);

    double s_init = s_star_init(k_a, k_hat_a, P_a_prime / noise_var) / noise_var;
    out.s_opt = s_init;
    // refine s only when the initializer sees enough hits for the probe
    // counts to carry a gradient; zero-hit terms keep the initializer
    if (count_amd_hits(g, s_init, pool, n_probe, mc.workers) >= 3) {
        ScalarSearchSpec sspec{s_init / 8.0, s_init * 8.0, s_init * 5e-2, 24};
        auto probe_obj = [&](double s) {
            return static_cast<double>(count_amd_hits(g, s, pool, n_probe, mc.workers));
        };
        ScalarMinResult sm = golden_section_min_t(probe_obj, sspec);
        out.s_opt = sm.argmin;
    }

    std::uint64_t hits = count_amd_hits(g, out.s_opt, pool, n_pool, mc.workers);
    out.hits = hits;
    out.samples = n_pool;
    auto est = ProbabilityEstimate::from_hits(hits, n_pool, mc.confidence);
    out.mean = est.mean;
    out.upper = est.upper;
    out.value = clamp01(std::min(out.upper, out.chernoff));
    return out;
}

// ---------------------------------------------------------------------------
// gamma_afp: deterministic quadrature over the auxiliary uniform variable
// ---------------------------------------------------------------------------

double gamma_afp_core(int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                      double beta_noise_mult) {
    double q_hat = static_cast<double>(k_hat_a) * k_hat_a * P_a_prime;
    if (q_hat <= 0.0) return 1.0;  // threshold argument <= 0 for every V
    double log_m = std::log(static_cast<double>(M_a));
    double a_half = 0.5 * n_dim;
    double tail_cut = a_half + 40.0 * std::sqrt(a_half) + 60.0;  // Q below 1e-15

    auto value_at_s = [&](double s, const GaussLegendre& gl) {
        double denom = 1.0 + 2.0 * s * q_hat;
        double big_l = a_half * std::log(denom);  // (n/2) ln(1+2 k^2 P' s)
        double beta = s * (1.0 - 1.0 / denom) * beta_noise_mult;
        if (!(beta > 0.0)) return 1.0;
        // V below v0 has a nonpositive threshold, so the clamped incomplete
        // gamma is exactly 1 there.
        double log_v0 = log_m - big_l;
        if (log_v0 >= 0.0) return 1.0;
        double lo = std::max(log_v0, -700.0);
        double mass = std::exp(lo);  // exact piece below the quadrature range
        double acc = 0.0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double u = lo + (0.0 - lo) * gl.x[i];
            double arg = (big_l - log_m + u) / (2.0 * beta);
            if (arg > tail_cut) continue;
            acc += gl.w[i] * std::exp(u) * upper_incomplete_gamma_reg(a_half, arg);
        }
        return clamp01(mass + (0.0 - lo) * acc);
    };

    // coarse quadrature during the search, full resolution at the optimum
    ScalarSearchSpec sspec{0.25 / 8.0, 0.25 * 8.0, 5e-4, 40};
    ScalarMinResult r =
        golden_section_min_t([&](double s) { return value_at_s(s, gl64()); }, sspec);
    return clamp01(std::min(value_at_s(r.argmin, gl256()), value_at_s(0.25, gl256())));
}

double gamma_afp(int k_hat_a, const AlarmBlockParams& params, long long M_a) {
    return gamma_afp_core(k_hat_a, params.n_a, params.P_a_prime, M_a, 1.0);
}

double nu0(const AlarmBlockParams& params, long long K, double rho_d) {
    if (params.P_a_prime > params.P_a)
        throw std::invalid_argument("nu0: P_a_prime must not exceed P_a");
    double trunc = params.P_a_prime > 0.0
                       ? upper_incomplete_gamma_reg(0.5 * params.n_a,
                                                    0.5 * params.n_a * params.P_a / params.P_a_prime)
                       : 0.0;
    double leak = binomial_window_leak(K, rho_d, params.k_a_lower, params.k_a_upper);
    return clamp01(trunc + leak);
}

// ---------------------------------------------------------------------------
// assembled bounds
// ---------------------------------------------------------------------------

AlarmBoundDiagnostics eps_amd_homa(const AlarmBlockParams& params, const SystemConfig& config,
                                   const McSettings& mc, const RcusSamplePool& pool,
                                   double target) {
    AlarmBoundDiagnostics diag;
    diag.nu0 = nu0(params, config.K, params.rho_d);
    int kl = params.k_a_lower, ku = params.k_a_upper;
    double total = diag.nu0;
    int n_hat_terms = ku - kl + 2;
    double skip = target > 0.0 ? 1e-3 * target / n_hat_terms : 0.0;

    // visit counts by descending binomial mass so the infeasibility exit
    // fires early; the assembled sum does not depend on the order
    std::vector<int> order;
    for (int k_a = kl; k_a <= ku; ++k_a) order.push_back(k_a);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return binomial_pmf(a, config.K, params.rho_d) > binomial_pmf(b, config.K, params.rho_d);
    });

    // cap-only pass: the Chernoff caps already give a valid assembly, and
    // when that clears the target no sampling is needed at all
    if (target > 0.0) {
        double cap_total = diag.nu0;
        std::map<int, std::pair<double, double>> zeta_memo;
        for (int k_a : order) {
            double pk = binomial_pmf(k_a, config.K, params.rho_d);
            if (pk < 1e-18) continue;
            double z0 = zeta(k_a, 0, params);
            double zsum = 0.0;
            for (int kp = kl; kp <= ku && zsum < 1.0; ++kp) zsum += zeta(k_a, kp, params);
            double zfac = std::min(1.0, zsum);
            zeta_memo[k_a] = {z0, zfac};
            double gsum = 0.0;
            gsum += gamma_amd_chernoff(k_a, 0, params.n_a, params.P_a_prime, config.M_a, 1.0);
            for (int k_hat = kl; k_hat <= ku; ++k_hat) {
                gsum += gamma_amd_chernoff(k_a, k_hat, params.n_a, params.P_a_prime,
                                           config.M_a, 1.0);
                if (pk * (z0 + zfac * gsum) + cap_total > target) break;
            }
            cap_total += pk * (z0 + zfac * gsum);
            if (cap_total > target) break;
        }
        if (cap_total <= target) {
            for (auto& [k_a, zz] : zeta_memo) {
                diag.zeta_to_zero[k_a] = zz.first;
                diag.zeta_sum_factor[k_a] = zz.second;
            }
            diag.eps_amd = clamp01(cap_total);
            return diag;
        }
    }

    bool exited = false;
    for (int k_a : order) {
        double pk = binomial_pmf(k_a, config.K, params.rho_d);
        if (pk < 1e-18) continue;
        double z0 = zeta(k_a, 0, params);
        double zsum = 0.0;
        for (int kp = kl; kp <= ku && zsum < 1.0; ++kp) zsum += zeta(k_a, kp, params);
        double zfac = std::min(1.0, zsum);
        diag.zeta_to_zero[k_a] = z0;
        diag.zeta_sum_factor[k_a] = zfac;

        double gsum = 0.0;
        auto add_hat = [&](int k_hat) {
            double pair_skip = (pk > 0 && zfac > 0) ? skip / (pk * zfac) : 1.0;
            GammaAmdValue gv = gamma_amd_core(k_a, k_hat, params.n_a, params.P_a_prime,
                                              config.M_a, 1.0, mc, pool, pair_skip);
            diag.gamma_amd_table[{k_a, k_hat}] = gv;
            diag.mc_samples_used += gv.samples;
            gsum += gv.value;
        };
        // nearest counts dominate; walk outward from the diagonal
        add_hat(0);
        for (int d = 0; d <= ku - kl; ++d) {
            if (k_a - d >= kl && k_a - d <= ku) add_hat(k_a - d);
            if (d > 0 && k_a + d >= kl && k_a + d <= ku) add_hat(k_a + d);
            if (target > 0.0 && total + pk * (z0 + zfac * gsum) > mc.high_exit_factor * target)
                break;
        }

        total += pk * (z0 + zfac * gsum);
        if (target > 0.0 && total > mc.high_exit_factor * target) {
            exited = true;
            break;
        }
    }
    (void)exited;
    diag.eps_amd = clamp01(total);
    return diag;
}

double eps_afp_homa(const AlarmBlockParams& params, long long M_a, AlarmBoundDiagnostics* diag,
                    double target) {
    int kl = params.k_a_lower, ku = params.k_a_upper;
    double zsum = 0.0;
    for (int kp = kl; kp <= ku && zsum < 1.0; ++kp) zsum += zeta(0, kp, params);
    double zfac = std::min(1.0, zsum);
    double gsum = 0.0;
    double exit_level = target > 0.0 ? 1.2 * target : 2.0;
    if (zfac > 0.0) {
        // the small counts dominate the false-positive sum
        for (int k_hat = kl; k_hat <= ku; ++k_hat) {
            double g = gamma_afp(k_hat, params, M_a);
            if (diag) diag->gamma_afp_table[k_hat] = g;
            gsum += g;
            if (zfac * gsum > exit_level) break;  // verdict already settled
        }
    }
    double v = std::min(1.0, zfac * gsum);
    if (diag) diag->eps_afp = v;
    return v;
}

}  // namespace uma
