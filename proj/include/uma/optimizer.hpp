#pragma once

#include <optional>
#include <string>

#include "uma/hnoma_bound.hpp"
#include "uma/result_cache.hpp"

// Experiment protocol: backoff-constrained standard-slice sizing, minimum
// alarm energy-per-bit search under reliability / sensitivity /
// dynamic-range constraints, and the nonorthogonal scenario modes.

namespace uma {

enum class Slicing { homa, hnoma };
enum class HnomaMode { rho_d_one, equal_power, free_mode };

struct ScenarioConfig {
    double delta_backoff_db = 0.1;
    double psi_dynamic_range_db = std::numeric_limits<double>::infinity();
    double rho_d_max = 1.0;
    Slicing slicing = Slicing::homa;
    HnomaMode hnoma_mode = HnomaMode::rho_d_one;
    std::vector<long long> sweep_K;
};

struct OptimizationResult {
    double ebno_s_star_db = 0.0;
    int n_s_min = 0;
    int n_a_max = 0;
    int n_a_opt = 0;
    double P_a_opt = 0.0;
    double P_a_prime_opt = 0.0;
    double P_s = 0.0;
    double rho_d_opt = 0.0;
    double ebno_a_db = 0.0;
    bool feasibility = false;
    std::string binding_constraint;
    // bound values at the returned optimum
    double eps_amd = 1.0, eps_afp = 1.0, eps_smd = 1.0, eps_sfp = 1.0;
};

// Largest P' < P with Q(n/2, n P / (2 P')) below the leak target.
double select_pprime(int n_block, double P, double leak_target);

// Tightest window [max{floor, .}, .] with binomial coverage >= 1 - leak;
// degrades to the widest achievable window when the floor makes the target
// unreachable.
std::pair<int, int> select_k_limits(long long K, double rho, double coverage_leak, int floor);

// Leak target for the codebook-power backoff of the standard slice. The
// nonorthogonal case scales it down so that the K rho_s Q(...) term in nu3
// stays well below the alarm reliability target.
double standard_leak_target(long long K, double rho_s, double eps_amd_target, bool nonorthogonal);

struct EbnoStarResult {
    double ebno_db = 0.0;
    double P_s = 0.0;
    int k_s_lower = 0, k_s_upper = 0;
};

// Minimum standard energy per bit at full blocklength, alarm absent, r_s=0.
EbnoStarResult ebno_s_star(long long K, const SystemConfig& config, const McSettings& mc);

struct NsMinResult {
    int n_s_min = 0;
    int n_a_max = 0;
    double ebno_s_star_db = 0.0;
    double P_s_at_ns_min = 0.0;
};

// Smallest standard blocklength meeting the targets at (E_b/N_0)_s* + delta
// with the induced power 2 b_s 10^((ebno*+delta)/10) / n_s.
NsMinResult find_ns_min(double delta_db, long long K, const SystemConfig& config,
                        const McSettings& mc,
                        const std::optional<EbnoStarResult>& precomputed = std::nullopt);

// Minimum alarm energy per bit for orthogonal slicing. When a cache is
// given, the expensive per-point alarm-bound evaluations (the gamma tables
// and assembled values) are persisted keyed by a content hash of the block
// parameters, message-set size, and Monte Carlo seed schedule.
OptimizationResult min_alarm_ebno_homa(long long K, int n_a_max, const ScenarioConfig& scenario,
                                       const SystemConfig& config, const McSettings& mc,
                                       const std::optional<EbnoStarResult>& precomputed = std::nullopt,
                                       const ResultCache* cache = nullptr);

// Minimum alarm energy per bit for nonorthogonal slicing in the rho_d = 1
// and equal-power modes.
OptimizationResult min_alarm_ebno_hnoma(long long K, const ScenarioConfig& scenario,
                                        const SystemConfig& config, const McSettings& mc,
                                        const std::optional<EbnoStarResult>& precomputed = std::nullopt);

}  // namespace uma
