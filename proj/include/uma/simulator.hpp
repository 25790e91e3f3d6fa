#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "uma/mc.hpp"
#include "uma/traffic_model.hpp"

// Desk-scale Monte Carlo oracle: actual random codebooks, encoders, the
// two-step alarm decoder, the standard list decoder (exact branch-and-bound
// subset search with a node budget), and the nonorthogonal SIC pipeline.
// Measures empirical AMD/AFP/SMD/SFP rates that the analytic bounds must
// dominate.

namespace uma {

struct TrialOutcome {
    bool alarm_present = false;
    int k_a = 0;
    int k_s = 0;
    MaybeMessage decoded_alarm;
    int decoded_k_a = 0;
    int decoded_k_s = 0;  // initial standard-count estimate
    std::set<std::uint64_t> decoded_list;
    int md_count = 0;        // transmitted distinct standard messages missed
    int fp_count = 0;        // decoded messages never transmitted
    int distinct_sent = 0;   // |distinct transmitted standard messages|
    int list_size = 0;
    double md_fraction = 0.0;  // 0/0 = 0 convention
    double fp_fraction = 0.0;
    bool amd = false;
    bool afp = false;
    bool heuristic_decode = false;  // subset search budget exceeded
};

struct SimAggregate {
    std::uint64_t trials = 0;
    std::uint64_t exact_trials = 0;  // heuristic decodes excluded
    std::uint64_t amd_events = 0;
    std::uint64_t afp_events = 0;
    double md_fraction_sum = 0.0;
    double fp_fraction_sum = 0.0;

    void add(const TrialOutcome& t) {
        ++trials;
        if (!t.heuristic_decode) {
            ++exact_trials;
            md_fraction_sum += t.md_fraction;
            fp_fraction_sum += t.fp_fraction;
        }
        if (t.amd) ++amd_events;
        if (t.afp) ++afp_events;
    }
    double amd_rate() const { return trials ? static_cast<double>(amd_events) / trials : 0.0; }
    double afp_rate() const { return trials ? static_cast<double>(afp_events) / trials : 0.0; }
    double smd_rate() const { return exact_trials ? md_fraction_sum / exact_trials : 0.0; }
    double sfp_rate() const { return exact_trials ? fp_fraction_sum / exact_trials : 0.0; }
};

struct DecoderBudget {
    std::uint64_t max_nodes = 5'000'000;
};

// One alarm-block trial: fresh codebook, power-truncated transmission,
// two-step decoding (count estimate, then joint message/count refinement).
TrialOutcome run_alarm_block_trial(const AlarmBlockParams& params, long long M_a, long long K,
                                   bool alarm_present, Rng& rng);

// One standard-block trial at explicit small message-set size M_s_small.
TrialOutcome run_standard_block_trial(const StandardBlockParams& params, long long M_s_small,
                                      long long K, double rho_s, Rng& rng,
                                      const DecoderBudget& budget = {});

// Full nonorthogonal trial with interference cancellation.
TrialOutcome run_hnoma_trial(const HnomaParams& params, long long M_a, long long M_s_small,
                             long long K, double rho_s, bool alarm_present, Rng& rng,
                             const DecoderBudget& budget = {});

// Exact argmin over integer k >= 0 of ||y - k c||^2 given the sufficient
// statistics; ties resolve to the smaller k.
int scaled_codeword_count_argmin(double inner_yc, double c_norm_sq, int k_max);

enum class KaProbeMode {
    adjacent_over,  // P[||Y-(K_a+1)C||^2 < ||Y-K_a C||^2]; matches the
                    // reported reference values (see README)
    full_argmin,    // P[argmin_k ||Y - kC||^2 != K_a]
};

// Count-estimation error probability for the alarm codeword under standard
// interference, P_a = P_s / psi. Simulated through the exact scalar
// sufficient statistics of the projection onto the alarm codeword.
ProbabilityEstimate ka_estimation_error_prob(int n, int K_s, double psi_db, double P_s, int K_a,
                                             std::uint64_t trials, const McSettings& mc,
                                             KaProbeMode mode = KaProbeMode::adjacent_over);

}  // namespace uma
