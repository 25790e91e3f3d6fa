#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "uma/mc.hpp"
#include "uma/traffic_model.hpp"

// Achievability bound for the alarm slice: the count-estimation confusion
// term zeta, the RCUs misdetection term gamma_amd (Monte Carlo with a
// conservative confidence bound and a closed-form Chernoff cap), the
// quadrature false-positive term gamma_afp, the measure-change penalty nu0,
// and the assembled AMD/AFP bounds. The *_core functions take an explicit
// effective noise variance so the nonorthogonal bound can reuse them.

namespace uma {

// ln m_a(y, k) evaluated from ||y||^2: the Gaussian likelihood of the
// received alarm block under k coherent users at metric power P_a.
double likelihood_metric_alarm(double y_norm_sq, double k, int n_a, double P_a);

// P[m(var_target) > m(var_other)] for ||Y||^2 with Y ~ N(0, sigma2 I_n),
// where m(v) is the zero-mean Gaussian log-likelihood with variance v.
// Metric comparisons are monotone in ||y||^2, so this is a single
// chi-square tail / cdf evaluation.
double prob_metric_greater(int n, double var_target, double var_other, double sigma2);

// zeta(k_a, k_a') with explicit interference power (0 for the orthogonal
// case): min over competing counts k of P[m_a(Y',k_a') > m_a(Y',k)] with
// Y' ~ N(0, (1 + k_a^2 P_a' + interference) I_n).
double zeta_core(int k_a, int k_a_prime, int n_dim, double P_a, double P_a_prime,
                 int k_lower, int k_upper, double interference_power);

double zeta(int k_a, int k_a_prime, const AlarmBlockParams& params);

// Generalized information density i_s(k_hat, x; y).
double generalized_info_density(double s, double k_a, double k_hat_a, double x, double y,
                                double P_a_prime);

// Closed-form initializer for the s-minimization (GMI maximizer); k_hat = 0
// falls back to 1/4.
double s_star_init(double k_a, double k_hat_a, double P_a_prime);

struct GammaAmdValue {
    double mean = 0.0;
    double upper = 1.0;       // one-sided confidence bound at mc.confidence
    double chernoff = 1.0;    // closed-form cap, valid deterministically
    double value = 1.0;       // min(upper, chernoff), clamped to [0,1]
    double s_opt = 0.25;
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
};

// RCUs misdetection term: min over s of P[sum_i i_s <= ln((M_a-1)/V)].
// Monte Carlo over the shared pool with common random numbers across s; the
// reported value is the upper confidence bound capped by the Chernoff form.
// noise_var is the effective noise variance of Y given X (1 for the
// orthogonal alarm block, 1 + k_s P_s' under interference).
GammaAmdValue gamma_amd_core(int k_a, int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                             double noise_var, const McSettings& mc, const RcusSamplePool& pool,
                             double skip_threshold = 0.0);

// Deterministic Chernoff upper bound on the same probability; used to skip
// Monte Carlo for terms that cannot matter.
double gamma_amd_chernoff(int k_a, int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                          double noise_var);

// RCUs false-positive term: min over s of E_V[Q(n/2, (1/(2 beta)) ((n/2)
// ln(1+2 k_hat^2 P' s) - ln(M_a/V)))] with beta = s(1 - 1/(1+2 k_hat^2 P'
// s)) * beta_noise_mult. Deterministic Gauss-Legendre quadrature over V on a
// log axis.
double gamma_afp_core(int k_hat_a, int n_dim, double P_a_prime, long long M_a,
                      double beta_noise_mult);

double gamma_afp(int k_hat_a, const AlarmBlockParams& params, long long M_a);

// nu0 = Q(n_a/2, n_a P_a / (2 P_a')) + 1 - sum_k Bino(k; K, rho_d).
double nu0(const AlarmBlockParams& params, long long K, double rho_d);

struct AlarmBoundDiagnostics {
    double nu0 = 0.0;
    double eps_amd = 1.0;
    double eps_afp = 1.0;
    // zeta(k_a, 0) and the min{1, sum zeta} factor per k_a.
    std::map<int, double> zeta_to_zero;
    std::map<int, double> zeta_sum_factor;
    // gamma tables keyed by (k_a, k_hat) and k_hat.
    std::map<std::pair<int, int>, GammaAmdValue> gamma_amd_table;
    std::map<int, double> gamma_afp_table;
    std::uint64_t mc_samples_used = 0;
};

// Assembled Theorem-style AMD bound for the orthogonal alarm block. The
// result is clamped to [0,1] and uses upper-confidence gamma values, so a
// "feasible" verdict is statistically conservative. `target` enables the
// early exits (0 disables them).
AlarmBoundDiagnostics eps_amd_homa(const AlarmBlockParams& params, const SystemConfig& config,
                                   const McSettings& mc, const RcusSamplePool& pool,
                                   double target = 0.0);

double eps_afp_homa(const AlarmBlockParams& params, long long M_a,
                    AlarmBoundDiagnostics* diag = nullptr, double target = 0.0);

}  // namespace uma
