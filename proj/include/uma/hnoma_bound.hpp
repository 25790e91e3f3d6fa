#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>

#include "uma/alarm_bound.hpp"
#include "uma/standard_bound.hpp"

// Achievability bound for nonorthogonal slicing: alarm decoding under
// standard-traffic interference (eta / theta terms), the count
// re-estimation bound alpha, and conditional SMD/SFP assemblies with
// residual-interference power rescaling after cancellation.

namespace uma {

// zeta with Y' ~ N(0, (1 + k_a^2 P_a' + k_s P_s') I_n).
double eta(int k_a, int k_a_prime, int k_s, const HnomaParams& params);

// gamma_amd at blocklength n with noise variance 1 + k_s P_s'.
GammaAmdValue theta_amd(int k_a, int k_hat_a, int k_s, const HnomaParams& params, long long M_a,
                        const McSettings& mc, const RcusSamplePool& pool,
                        double skip_threshold = 0.0);

// gamma_afp at blocklength n with beta scaled by (1 + k_s P_s').
double theta_afp(int k_hat_a, int k_s, const HnomaParams& params, long long M_a);

// Bound on P[K_a re-estimated as k_hat | correct alarm decision]:
// 1{k_hat=0} eta(k_a,0,k_s) + min{1, sum eta} (1 + (k_a-k_hat)^2 P_a' /
// (4(1+k_s P_s')))^{-n/2}.
double alpha(int k_a, int k_hat_a, int k_s, const HnomaParams& params);

// Measure-change penalties; nu2 includes nu3.
std::pair<double, double> nu2_nu3(const HnomaParams& params, const SystemConfig& config,
                                  double rho_d);

struct HnomaBoundDiagnostics {
    double nu2 = 0.0, nu3 = 0.0;
    double eps_amd = 1.0, eps_afp = 1.0;
    double eps_smd_alarm = 1.0, eps_smd_noalarm = 1.0;
    double eps_sfp_alarm = 1.0, eps_sfp_noalarm = 1.0;
    double eps_smd = 1.0, eps_sfp = 1.0;  // max over the two alarm states
    bool feasible = false;
    std::string binding_constraint;
    std::uint64_t mc_samples_used = 0;
};

// Full Theorem-style evaluation. The standard-slice kernels are shared and
// cached across the residual-interference rescalings (cache key matches to
// 1e-12 relative). When `targets_enabled`, evaluation short-circuits as
// soon as one of the six constraints is violated.
class HnomaEval {
  public:
    HnomaEval(const HnomaParams& params, const SystemConfig& config, const McSettings& mc,
              const RcusSamplePool& pool, StandardBoundSettings std_settings = {});

    HnomaBoundDiagnostics evaluate(bool targets_enabled);

    // Per-count alarm kernels (exposed for tests).
    double eps_bar_amd(int k_s);
    double eps_bar_afp(int k_s);

  private:
    StdBlockEval& std_eval_for_rescale(double rescale);
    double eta_cached(int k_a, int k_a_prime, int k_s);
    double eta_sum_factor(int k_a, int k_s);

    HnomaParams params_;
    SystemConfig config_;
    McSettings mc_;
    const RcusSamplePool& pool_;
    StandardBoundSettings std_settings_;
    std::map<std::tuple<int, int, int>, double> eta_cache_;
    std::map<std::pair<int, int>, double> eta_sum_cache_;
    std::map<int, double> eps_bar_amd_cache_;
    std::map<int, double> eps_bar_afp_cache_;
    std::map<long long, std::unique_ptr<StdBlockEval>> std_cache_;
    std::map<std::pair<long long, int>, double> eps_bar_smd_cache_;
    std::map<std::pair<long long, int>, double> eps_bar_sfp_cache_;
    std::uint64_t mc_used_ = 0;
};

}  // namespace uma
