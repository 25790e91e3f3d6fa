#include "uma/hnoma_bound.hpp"

#include <algorithm>
#include <cmath>

namespace uma {

namespace {
double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }
}

double eta(int k_a, int k_a_prime, int k_s, const HnomaParams& params) {
    return zeta_core(k_a, k_a_prime, params.n, params.alarm.P_a, params.alarm.P_a_prime,
                     params.alarm.k_a_lower, params.alarm.k_a_upper,
                     k_s * params.standard.P_s_prime);
}

GammaAmdValue theta_amd(int k_a, int k_hat_a, int k_s, const HnomaParams& params, long long M_a,
                        const McSettings& mc, const RcusSamplePool& pool, double skip_threshold) {
    double noise_var = 1.0 + k_s * params.standard.P_s_prime;
    return gamma_amd_core(k_a, k_hat_a, params.n, params.alarm.P_a_prime, M_a, noise_var, mc,
                          pool, skip_threshold);
}

double theta_afp(int k_hat_a, int k_s, const HnomaParams& params, long long M_a) {
    double noise_mult = 1.0 + k_s * params.standard.P_s_prime;
    return gamma_afp_core(k_hat_a, params.n, params.alarm.P_a_prime, M_a, noise_mult);
}

double alpha(int k_a, int k_hat_a, int k_s, const HnomaParams& params) {
    double v = 0.0;
    if (k_hat_a == 0) v += eta(k_a, 0, k_s, params);
    double esum = 0.0;
    for (int kp = params.alarm.k_a_lower; kp <= params.alarm.k_a_upper; ++kp)
        esum += eta(k_a, kp, k_s, params);
    double d = static_cast<double>(k_a - k_hat_a);
    double chern = -0.5 * params.n *
                   std::log1p(d * d * params.alarm.P_a_prime /
                              (4.0 * (1.0 + k_s * params.standard.P_s_prime)));
    v += std::min(1.0, esum) * std::exp(chern);
    return clamp01(v);
}

std::pair<double, double> nu2_nu3(const HnomaParams& params, const SystemConfig& config,
                                  double rho_d) {
    StandardBlockParams std_n = params.standard;
    std_n.n_s = params.n;
    double nu3 = nu1(std_n, config.K, config.rho_s, config.b_s);
    double trunc_a = params.alarm.P_a_prime > 0.0
                         ? upper_incomplete_gamma_reg(
                               0.5 * params.n, 0.5 * params.n * params.alarm.P_a /
                                                   params.alarm.P_a_prime)
                         : 0.0;
    double leak_a =
        binomial_window_leak(config.K, rho_d, params.alarm.k_a_lower, params.alarm.k_a_upper);
    double nu2 = clamp01(trunc_a + leak_a + nu3);
    return {nu2, nu3};
}

HnomaEval::HnomaEval(const HnomaParams& params, const SystemConfig& config, const McSettings& mc,
                     const RcusSamplePool& pool, StandardBoundSettings std_settings)
    : params_(params), config_(config), mc_(mc), pool_(pool), std_settings_(std_settings) {}

double HnomaEval::eta_cached(int k_a, int k_a_prime, int k_s) {
    auto key = std::make_tuple(k_a, k_a_prime, k_s);
    auto it = eta_cache_.find(key);
    if (it != eta_cache_.end()) return it->second;
    double v = eta(k_a, k_a_prime, k_s, params_);
    eta_cache_.emplace(key, v);
    return v;
}

double HnomaEval::eta_sum_factor(int k_a, int k_s) {
    auto key = std::make_pair(k_a, k_s);
    auto it = eta_sum_cache_.find(key);
    if (it != eta_sum_cache_.end()) return it->second;
    double esum = 0.0;
    for (int kp = params_.alarm.k_a_lower; kp <= params_.alarm.k_a_upper && esum < 1.0; ++kp)
        esum += eta_cached(k_a, kp, k_s);
    double v = std::min(1.0, esum);
    eta_sum_cache_.emplace(key, v);
    return v;
}

StdBlockEval& HnomaEval::std_eval_for_rescale(double rescale) {
    long long key = std::llround(std::log1p(rescale - 1.0) * 1e12);
    auto it = std_cache_.find(key);
    if (it != std_cache_.end()) return *it->second;
    StandardBlockParams p = params_.standard;
    p.n_s = params_.n;
    p.P_s /= rescale;
    p.P_s_prime /= rescale;
    auto ev = std::make_unique<StdBlockEval>(p, config_.b_s, config_.K, config_.rho_s, mc_,
                                             std_settings_);
    auto [pos, ok] = std_cache_.emplace(key, std::move(ev));
    (void)ok;
    return *pos->second;
}

double HnomaEval::eps_bar_amd(int k_s) {
    if (auto it = eps_bar_amd_cache_.find(k_s); it != eps_bar_amd_cache_.end())
        return it->second;
    int kl = params_.alarm.k_a_lower, ku = params_.alarm.k_a_upper;
    int n_hat_terms = ku - kl + 2;
    double skip = 1e-3 * config_.eps_amd_target / n_hat_terms;
    double acc = 0.0;
    for (int k_a = kl; k_a <= ku; ++k_a) {
        double pk = binomial_pmf(k_a, config_.K, params_.alarm.rho_d);
        if (pk < 1e-18) continue;
        double zfac = eta_sum_factor(k_a, k_s);
        double gsum = 0.0;
        auto add_hat = [&](int k_hat) {
            double pair_skip = (pk > 0 && zfac > 0) ? skip / (pk * zfac) : 1.0;
            GammaAmdValue gv = theta_amd(k_a, k_hat, k_s, params_, config_.M_a, mc_, pool_,
                                         pair_skip);
            mc_used_ += gv.samples;
            gsum += gv.value;
        };
        add_hat(0);
        for (int d = 0; d <= ku - kl; ++d) {
            if (k_a - d >= kl && k_a - d <= ku) add_hat(k_a - d);
            if (d > 0 && k_a + d >= kl && k_a + d <= ku) add_hat(k_a + d);
        }
        acc += pk * (eta_cached(k_a, 0, k_s) + zfac * gsum);
    }
    double v = clamp01(acc);
    eps_bar_amd_cache_.emplace(k_s, v);
    return v;
}

double HnomaEval::eps_bar_afp(int k_s) {
    if (auto it = eps_bar_afp_cache_.find(k_s); it != eps_bar_afp_cache_.end())
        return it->second;
    int kl = params_.alarm.k_a_lower, ku = params_.alarm.k_a_upper;
    double zsum = 0.0;
    for (int kp = kl; kp <= ku && zsum < 1.0; ++kp) zsum += eta_cached(0, kp, k_s);
    double zfac = std::min(1.0, zsum);
    double acc = 0.0;
    for (int k_hat = kl; k_hat <= ku; ++k_hat) {
        acc += zfac * theta_afp(k_hat, k_s, params_, config_.M_a);
        if (acc > 2.0) break;
    }
    double v = clamp01(acc);
    eps_bar_afp_cache_.emplace(k_s, v);
    return v;
}

HnomaBoundDiagnostics HnomaEval::evaluate(bool targets_enabled) {
    HnomaBoundDiagnostics d;
    auto [nu2, nu3] = nu2_nu3(params_, config_, params_.alarm.rho_d);
    d.nu2 = nu2;
    d.nu3 = nu3;
    int ksl = params_.standard.k_s_lower, ksu = params_.standard.k_s_upper;
    int kal = params_.alarm.k_a_lower, kau = params_.alarm.k_a_upper;

    auto fail = [&](const char* which) {
        d.feasible = false;
        d.binding_constraint = which;
        d.mc_samples_used = mc_used_;
        return d;
    };

    // AFP first: pure quadrature, cheapest.
    {
        double acc = nu3;
        for (int k_s = ksl; k_s <= ksu && acc <= 1.0; ++k_s) {
            double pk = binomial_pmf(k_s, config_.K, config_.rho_s);
            if (pk < 1e-18) continue;
            acc += pk * eps_bar_afp(k_s);
        }
        d.eps_afp = clamp01(acc);
        if (targets_enabled && d.eps_afp > config_.eps_afp_target) return fail("afp");
    }

    // AMD.
    {
        double acc = nu2;
        for (int k_s = ksl; k_s <= ksu; ++k_s) {
            double pk = binomial_pmf(k_s, config_.K, config_.rho_s);
            if (pk < 1e-18) continue;
            acc += pk * eps_bar_amd(k_s);
            if (targets_enabled && acc > mc_.high_exit_factor * config_.eps_amd_target) break;
        }
        d.eps_amd = clamp01(acc);
        if (targets_enabled && d.eps_amd > config_.eps_amd_target) return fail("amd");
    }

    // SMD/SFP without alarm.
    {
        double prod_smd = 0.0, prod_sfp = 0.0;
        StdBlockEval& se = std_eval_for_rescale(1.0);
        for (int k_s = ksl; k_s <= ksu; ++k_s) {
            double pk = binomial_pmf(k_s, config_.K, config_.rho_s);
            if (pk < 1e-18) continue;
            double ebar_afp = eps_bar_afp(k_s);
            double smd_k = clamp01(se.eps_bar_smd(k_s));
            double sfp_k = clamp01(se.eps_bar_sfp(k_s));
            prod_smd += pk * (1.0 - ebar_afp) * (1.0 - smd_k);
            prod_sfp += pk * (1.0 - ebar_afp) * (1.0 - sfp_k);
        }
        d.eps_smd_noalarm = clamp01(1.0 - prod_smd + nu2);
        d.eps_sfp_noalarm = clamp01(1.0 - prod_sfp + nu2);
        if (targets_enabled && d.eps_smd_noalarm > config_.eps_smd_target)
            return fail("smd_noalarm");
        if (targets_enabled && d.eps_sfp_noalarm > config_.eps_sfp_target)
            return fail("sfp_noalarm");
    }

    // SMD/SFP with alarm: alpha-weighted kernels at rescaled powers.
    {
        double prod_smd = 0.0, prod_sfp = 0.0;
        for (int k_s = ksl; k_s <= ksu; ++k_s) {
            double pk = binomial_pmf(k_s, config_.K, config_.rho_s);
            if (pk < 1e-18) continue;
            double ebar_amd = eps_bar_amd(k_s);
            double inner_smd = 0.0, inner_sfp = 0.0;
            for (int k_a = kal; k_a <= kau; ++k_a) {
                double pa = binomial_pmf(k_a, config_.K, params_.alarm.rho_d);
                if (pa < 1e-18) continue;
                auto add_hat = [&](int k_hat) {
                    double al = alpha(k_a, k_hat, k_s, params_);
                    if (pa * al < 1e-14) return;
                    double diff = static_cast<double>(k_a - k_hat);
                    double rescale = 1.0 + diff * diff * params_.alarm.P_a_prime;
                    StdBlockEval& se = std_eval_for_rescale(rescale);
                    long long rkey = std::llround(std::log1p(rescale - 1.0) * 1e12);
                    auto key = std::make_pair(rkey, k_s);
                    auto its = eps_bar_smd_cache_.find(key);
                    double smd_k;
                    if (its != eps_bar_smd_cache_.end()) {
                        smd_k = its->second;
                    } else {
                        smd_k = clamp01(se.eps_bar_smd(k_s));
                        eps_bar_smd_cache_.emplace(key, smd_k);
                    }
                    auto itf = eps_bar_sfp_cache_.find(key);
                    double sfp_k;
                    if (itf != eps_bar_sfp_cache_.end()) {
                        sfp_k = itf->second;
                    } else {
                        sfp_k = clamp01(se.eps_bar_sfp(k_s));
                        eps_bar_sfp_cache_.emplace(key, sfp_k);
                    }
                    inner_smd += pa * al * smd_k;
                    inner_sfp += pa * al * sfp_k;
                };
                add_hat(0);
                for (int k_hat = kal; k_hat <= kau; ++k_hat) add_hat(k_hat);
            }
            prod_smd += pk * (1.0 - ebar_amd) * (1.0 - std::min(1.0, inner_smd));
            prod_sfp += pk * (1.0 - ebar_amd) * (1.0 - std::min(1.0, inner_sfp));
        }
        d.eps_smd_alarm = clamp01(1.0 - prod_smd + nu2);
        d.eps_sfp_alarm = clamp01(1.0 - prod_sfp + nu2);
    }

    d.eps_smd = std::max(d.eps_smd_alarm, d.eps_smd_noalarm);
    d.eps_sfp = std::max(d.eps_sfp_alarm, d.eps_sfp_noalarm);
    d.mc_samples_used = mc_used_;
    d.feasible = d.eps_amd <= config_.eps_amd_target && d.eps_afp <= config_.eps_afp_target &&
                 d.eps_smd <= config_.eps_smd_target && d.eps_sfp <= config_.eps_sfp_target;
    if (!d.feasible && d.binding_constraint.empty()) {
        if (d.eps_smd_alarm > config_.eps_smd_target) d.binding_constraint = "smd_alarm";
        else if (d.eps_sfp_alarm > config_.eps_sfp_target) d.binding_constraint = "sfp_alarm";
    }
    return d;
}

}  // namespace uma
