#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uma/mc.hpp"
#include "uma/traffic_model.hpp"

// Achievability bound for the standard slice: list-size grids, the
// error-exponent terms p, the dependence-testing terms q, the
// count-estimation term xi, the measure-change penalty nu1, and the
// assembled per-count kernels eps_bar_smd / eps_bar_sfp that the
// nonorthogonal bound reuses at rescaled powers.

namespace uma {

// Admissible (t, t') index sets for a given (k_s, k_s'). All three sets are
// contiguous integer ranges; a range with lo > hi is empty.
struct TTPrimeGrid {
    int k_s = 0, k_s_prime = 0;
    int underline = 0;  // max{k_s_lower, k_s' - r_s}
    int overline = 0;   // min{k_s_upper, k_s' + r_s}
    int c_md = 0;       // (k_s - overline)^+, forced misdetections
    int c_fp = 0;       // (underline - k_s)^+, forced false positives
    int t_max = -1;     // T = [0 : t_max]
    std::vector<int> u_t;
    std::vector<std::pair<int, int>> t_set;      // T_t per t
    std::vector<std::pair<int, int>> t_bar_set;  // T_bar_t per t
};

TTPrimeGrid build_tt_grid(int k_s, int k_s_prime, const StandardBlockParams& params, double b_s);

struct QTermResult {
    double q_t = 1.0;
    std::vector<double> q_tt;  // indexed by t' - t_bar_lo
    bool skipped = true;       // sentinel 1 used (budget exceeded or disabled)
};

struct StandardBoundSettings {
    bool enable_q_terms = false;        // q needs subset MC; p and xi dominate at scale
    std::uint64_t q_samples = 2000;
    std::uint64_t subset_budget = 10000;
    double pair_tolerance = 1e-12;      // skip (k_s,k_s') pairs below this contribution
    double p_floor = 1e-18;             // stop refining exponents below this level
};

class StdBlockEval {
  public:
    StdBlockEval(const StandardBlockParams& params, double b_s, long long K, double rho_s,
                 const McSettings& mc, StandardBoundSettings settings = {});

    // E(t, t') for the pair (k_s, k_s'): three-variable maximization of the
    // exponent objective, warm-started across calls and cached.
    double error_exponent(int t, int t_prime, int k_s, int k_s_prime);

    // p_{t,t'} = exp(-n_s E(t,t')/2) and p_t = sum over T_bar_t.
    double p_tt(int t, int t_prime, int k_s, int k_s_prime);
    double p_t(int t, const TTPrimeGrid& grid);

    // Dependence-testing terms; returns skipped=true sentinel when the
    // subset enumeration exceeds the budget or q is disabled.
    QTermResult q_terms(int t, const TTPrimeGrid& grid, std::uint64_t stream);

    // Count-estimation confusion bound, closed form.
    double xi(int k_s, int k_s_prime) const;

    // Per-count kernels of the theorem.
    double eps_bar_smd(int k_s);
    double eps_bar_sfp(int k_s);

    // Assembled bounds with the binomial weights and nu1.
    double eps_smd();
    double eps_sfp();

    double nu1_value() const;
    const StandardBlockParams& params() const { return params_; }

  private:
    struct PairTerms {
        double smd = 0.0;
        double sfp = 0.0;
    };
    PairTerms pair_contribution(int k_s, int k_s_prime);

    StandardBlockParams params_;
    double b_s_;
    long long K_;
    double rho_s_;
    McSettings mc_;
    StandardBoundSettings settings_;
    std::unordered_map<std::uint64_t, double> exponent_cache_;
    double warm_rho1_ = 1.0, warm_rho2_ = 1.0, warm_loglam_ = 0.0;
    bool warm_valid_ = false;
};

// nu1 = (1 - window mass) + (1 - E[distinct-codeword probability]) +
// K rho_s Q(n_s/2, n_s P_s / (2 P_s')).
double nu1(const StandardBlockParams& params, long long K, double rho_s, double b_s);

// ln C(M_s - offset, j) under the bits convention.
double log_choose_ms(double b_s, double offset, int j);

}  // namespace uma
