#pragma once

#include <cstdint>
#include <vector>

#include "uma/special_math.hpp"

namespace uma {

// Monte Carlo budgets, confidence level, and the seed derivation scheme.
// Streams are derived as seed ^ hash(purpose, index) so that independently
// seeded batches can run concurrently and reduce deterministically.
struct McSettings {
    std::uint64_t samples = 10'000'000;
    double confidence = 0.99;  // one-sided, for the conservative upper values
    std::uint64_t seed = 1;
    // Early-exit factors for feasibility probing: stop refining once the
    // upper confidence bound is below low_exit_factor * target or the lower
    // confidence bound is above high_exit_factor * target.
    double low_exit_factor = 0.1;
    double high_exit_factor = 10.0;
    int workers = 1;

    std::uint64_t stream(std::uint64_t purpose, std::uint64_t index = 0) const {
        return purpose * 0x9e3779b97f4a7c15ULL + index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    }
};

struct ProbabilityEstimate {
    double mean = 0.0;
    double upper = 1.0;  // one-sided upper confidence bound
    double lower = 0.0;  // one-sided lower confidence bound
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;

    static ProbabilityEstimate from_hits(std::uint64_t hits, std::uint64_t n, double confidence) {
        ProbabilityEstimate e;
        e.hits = hits;
        e.samples = n;
        e.mean = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
        e.upper = binomial_upper_confidence(static_cast<long long>(hits), static_cast<long long>(n), confidence);
        e.lower = binomial_lower_confidence(static_cast<long long>(hits), static_cast<long long>(n), confidence);
        return e;
    }
};

// Shared sample pool for the RCUs Monte Carlo terms. For Y = k X + Zbar with
// X ~ N(0, P' I_n) and Zbar ~ N(0, s2 I_n), the information-density sum is a
// function of (||Zbar||^2, ||Y||^2) only, and the pair is generated exactly
// from three scalar draws per sample:
//   A  ~ chi^2_n                         (||Zbar||^2 / s2)
//   GA = G sqrt(A), G ~ N(0,1)           (cross term)
//   Q2 = G^2 + chi^2_{n-1}               (||W||^2 for the signal direction)
// so ||Y||^2 = s2 (A + 2 kap GA + kap^2 Q2) with kap = k sqrt(P') / sqrt(s2).
// One pool serves every (k, k_hat, s) on the same dimension.
struct RcusSamplePool {
    int n_dim = 0;
    std::vector<float> a;      // chi^2_n
    std::vector<float> ga;     // G * sqrt(A)
    std::vector<float> q2;     // G^2 + chi^2_{n-1}
    std::vector<float> log_v;  // ln of the union-bound auxiliary uniform draw

    std::uint64_t size() const { return a.size(); }
    void generate(int n, std::uint64_t count, std::uint64_t seed, int workers);
};

}  // namespace uma
