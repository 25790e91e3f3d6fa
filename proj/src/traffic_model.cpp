#include "uma/traffic_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uma/special_math.hpp"

namespace uma {

std::vector<UserMessages> sample_user_messages(const SystemConfig& config, double rho_d,
                                               std::uint64_t M_s_small, bool alarm_present,
                                               Rng& rng) {
    if (rho_d > config.rho_d_max + 1e-12)
        throw std::invalid_argument("sample_user_messages: rho_d exceeds rho_d_max");
    std::vector<UserMessages> out(static_cast<std::size_t>(config.K));
    MaybeMessage alarm_word;
    if (alarm_present) alarm_word = rng.below(static_cast<std::uint64_t>(config.M_a));
    for (auto& u : out) {
        if (alarm_present && rng.uniform() < rho_d) u.alarm = alarm_word;
        if (rng.uniform() < config.rho_s) u.standard = rng.below(M_s_small);
    }
    return out;
}

double log2_message_count(long long M) {
    if (M < 2) throw std::invalid_argument("message set must have at least 2 entries");
    return std::log2(static_cast<double>(M));
}

double ebno_alarm_homa(int n_a, double P_a, double rho_d, long long K, long long M_a) {
    double bits = log2_message_count(M_a);
    return lin_to_db(static_cast<double>(n_a) * P_a * rho_d * static_cast<double>(K) / (2.0 * bits));
}

double ebno_std_homa(int n_s, double P_s, double b_s) {
    if (!(b_s > 0)) throw std::invalid_argument("ebno_std_homa: b_s must be positive");
    return lin_to_db(static_cast<double>(n_s) * P_s / (2.0 * b_s));
}

double ebno_hnoma(int n, double P_x, double rho_d_or_one, double bits, long long K_or_one) {
    return lin_to_db(static_cast<double>(n) * P_x * rho_d_or_one * static_cast<double>(K_or_one) /
                     (2.0 * bits));
}

double rho_d_floor(long long K, double eps_amd_target) {
    if (!(eps_amd_target > 0.0) || !(eps_amd_target < 1.0))
        throw std::invalid_argument("rho_d_floor: target must be in (0,1)");
    return -std::expm1(std::log(eps_amd_target) / static_cast<double>(K));
}

double log_ms_minus(double b_s, double c) {
    double lnM = b_s * std::numbers::ln2_v<double>;
    double corr = c * std::exp(-lnM);
    return lnM + std::log1p(-corr);
}

double binomial_window_leak(long long K, double p, int k_lower, int k_upper) {
    double leak = 0.0;
    for (int k = k_lower - 1; k >= 0; --k) {
        double t = binomial_pmf(k, K, p);
        leak += t;
        if (t < 1e-30) break;
    }
    for (long long k = k_upper + 1; k <= K; ++k) {
        double t = binomial_pmf(k, K, p);
        leak += t;
        if (t < 1e-30) break;
    }
    return std::min(1.0, leak);
}

}  // namespace uma
