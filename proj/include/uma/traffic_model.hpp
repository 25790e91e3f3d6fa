#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uma/rng.hpp"

// Scenario configuration, the per-user message generation law, and the
// energy-per-bit accounting for both slicing strategies.

namespace uma {

// The null message is an explicit absent value, never index 0.
using MaybeMessage = std::optional<std::uint64_t>;

struct SystemConfig {
    long long K = 1000;     // total users
    int n = 30000;          // frame length, channel uses
    long long M_a = 8;      // alarm message-set size
    double b_s = 100.0;     // standard message-set size, carried as log2
    double rho_s = 0.01;    // standard activity probability
    double rho_d_max = 1.0; // device sensitivity ceiling
    double P = 1.0;         // per-symbol power budget
    double eps_amd_target = 1e-5;
    double eps_afp_target = 1e-5;
    double eps_smd_target = 0.1;
    double eps_sfp_target = 0.1;
};

// Per-slice tunables. P_a_prime is the codebook draw power; the power
// constraint truncation happens at P_a.
struct AlarmBlockParams {
    int n_a = 0;
    double P_a = 0.0;
    double P_a_prime = 0.0;
    double rho_d = 1.0;
    int k_a_lower = 1;
    int k_a_upper = 2;
    int r_a = 0;  // retained for interface fidelity; appears in no formula
};

struct StandardBlockParams {
    int n_s = 0;
    double P_s = 0.0;
    double P_s_prime = 0.0;
    int k_s_lower = 0;
    int k_s_upper = 1;
    int r_s = 0;  // standard-message decoding radius
};

// Nonorthogonal slicing: both slices share the full blocklength n and the
// joint constraint P_a + P_s <= P.
struct HnomaParams {
    int n = 0;
    AlarmBlockParams alarm;     // n_a field unused; blocklength is n
    StandardBlockParams standard;  // n_s field unused; blocklength is n
};

struct UserMessages {
    MaybeMessage alarm;     // common alarm message index when transmitted
    MaybeMessage standard;  // per-user standard message index
};

// Draws the per-user message pair per the generation tree: if an alarm event
// occurred each user carries the common alarm message with probability
// rho_d; independently it carries a uniform standard message with
// probability rho_s. M_s_small is the explicit standard message-set size
// (simulation runs at desk scale only).
std::vector<UserMessages> sample_user_messages(const SystemConfig& config, double rho_d,
                                               std::uint64_t M_s_small, bool alarm_present,
                                               Rng& rng);

// (E_b/N_0)_a = n_a P_a rho_d K / (2 log2 M_a), in dB.
double ebno_alarm_homa(int n_a, double P_a, double rho_d, long long K, long long M_a);

// (E_b/N_0)_s = n_s P_s / (2 b_s), in dB.
double ebno_std_homa(int n_s, double P_s, double b_s);

// Nonorthogonal slicing: same formulas at blocklength n. For the alarm pass
// rho_d and K; for the standard slice pass 1 and 1.
double ebno_hnoma(int n, double P_x, double rho_d_or_one, double bits, long long K_or_one);

// Smallest admissible alarm transmit probability, 1 - eps^(1/K).
double rho_d_floor(long long K, double eps_amd_target);

// log2(M_a) helper for the energy formulas.
double log2_message_count(long long M);

// ln(M_s - c) under the bits convention: b_s ln 2 + ln(1 - c 2^-b_s). The
// correction underflows to zero for b_s = 100 and desk-scale c.
double log_ms_minus(double b_s, double c);

// Binomial mass outside [k_lower, k_upper], accumulated from the window
// edges so no 1 - sum cancellation occurs.
double binomial_window_leak(long long K, double p, int k_lower, int k_upper);

}  // namespace uma
