#include "uma/standard_bound.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "uma/alarm_bound.hpp"
#include "uma/rng.hpp"
#include "uma/special_math.hpp"

namespace uma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

long long ms_as_int(double b_s) {
    return b_s < 60.0 ? static_cast<long long>(std::llround(std::pow(2.0, b_s))) : -1;
}

int pos(int v) { return v > 0 ? v : 0; }

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double log_choose_ms(double b_s, double offset, int j) {
    if (j < 0) return kNegInf;
    if (j == 0) return 0.0;
    long long mi = ms_as_int(b_s);
    if (mi >= 0) {
        double m = static_cast<double>(mi) - offset;
        if (m < j) return kNegInf;
        return log_binomial_coeff(m, j);
    }
    // M_s carried as bits: ln C(M_s - offset, j) = sum ln(M_s - offset - i) - ln j!
    // where each ln(M_s - c) = b_s ln2 + ln1p(-c 2^-b_s); the correction
    // underflows for b_s = 100 at desk-scale offsets.
    double acc = 0.0;
    for (int i = 0; i < j; ++i) acc += log_ms_minus(b_s, offset + i);
    return acc - log_gamma(static_cast<double>(j) + 1.0);
}

TTPrimeGrid build_tt_grid(int k_s, int k_s_prime, const StandardBlockParams& params, double b_s) {
    TTPrimeGrid g;
    g.k_s = k_s;
    g.k_s_prime = k_s_prime;
    g.underline = std::max(params.k_s_lower, k_s_prime - params.r_s);
    g.overline = std::min(params.k_s_upper, k_s_prime + params.r_s);
    g.c_md = pos(k_s - g.overline);
    g.c_fp = pos(g.underline - k_s);

    long long mi = ms_as_int(b_s);
    long long t_cap = std::min<long long>(g.overline, k_s);
    if (mi >= 0) t_cap = std::min<long long>(t_cap, mi - g.underline - g.c_md);
    g.t_max = static_cast<int>(std::max<long long>(-1, t_cap));

    for (int t = 0; t <= g.t_max; ++t) {
        long long u = std::min<long long>(pos(g.overline - k_s) - pos(g.underline - k_s) + t,
                                          g.overline - pos(g.underline - k_s));
        if (mi >= 0) u = std::min<long long>(u, mi - std::max(g.underline, k_s));
        int lo_t = pos(pos(k_s - g.overline) - pos(g.underline - k_s) +
                       std::max(g.underline, 1) - k_s + t);
        int lo_bar = pos(pos(k_s - g.overline) - pos(k_s - g.underline) + t);
        g.u_t.push_back(static_cast<int>(u));
        g.t_set.emplace_back(lo_t, static_cast<int>(u));
        g.t_bar_set.emplace_back(lo_bar, static_cast<int>(u));
    }
    return g;
}

// ---------------------------------------------------------------------------
// error exponent
// ---------------------------------------------------------------------------

namespace {

struct ExponentProblem {
    double r1t;   // (2/n_s) ln C(M_s - max{k_s, underline}, t')  [= rho1-weighted rate]
    double r2t;   // (2/n_s) ln C(min{k_s, overline}, t)
    double pp;    // P_s'
    double t;     // misdetections in play
    double tp;    // false positives in play
    double cpp;   // (c_md + c_fp) P_s'

    double eval(double rho1, double rho2, double lam) const {
        double mu = rho1 * lam / (1.0 + pp * tp * lam);
        double a = rho1 * std::log1p(pp * tp * lam) + std::log1p(pp * t * mu);
        double b = rho1 * lam - mu / (1.0 + pp * t * mu);
        double arg = 1.0 - rho2 * (1.0 + cpp) * b;
        if (!(arg > 0.0)) return -1e300;
        double v = -rho2 * (rho1 * r1t + r2t) + rho2 * a + std::log(arg);
        return std::isfinite(v) ? v : -1e300;
    }
};

constexpr double kLogLamLo = -13.815510557964274;  // ln 1e-6
constexpr double kLogLamHi = 13.815510557964274;   // ln 1e6

double inner_lambda_max(const ExponentProblem& pr, double rho1, double rho2, double tol,
                        double* arg_out) {
    ScalarSearchSpec spec{kLogLamLo, kLogLamHi, tol, 90};
    auto obj = [&](double ll) { return -pr.eval(rho1, rho2, std::exp(ll)); };
    ScalarMinResult r = golden_section_min_t(obj, spec);
    if (arg_out) *arg_out = r.argmin;
    return -r.min;
}

}  // namespace

StdBlockEval::StdBlockEval(const StandardBlockParams& params, double b_s, long long K,
                           double rho_s, const McSettings& mc, StandardBoundSettings settings)
    : params_(params), b_s_(b_s), K_(K), rho_s_(rho_s), mc_(mc), settings_(settings) {}

double StdBlockEval::error_exponent(int t, int t_prime, int k_s, int k_s_prime) {
    int underline = std::max(params_.k_s_lower, k_s_prime - params_.r_s);
    int overline = std::min(params_.k_s_upper, k_s_prime + params_.r_s);
    int min_ko = std::min(k_s, overline);
    int max_ku = std::max(k_s, underline);
    int c = pos(k_s - overline) + pos(underline - k_s);

    std::uint64_t key = static_cast<std::uint64_t>(t) | (static_cast<std::uint64_t>(t_prime) << 12) |
                        (static_cast<std::uint64_t>(min_ko) << 24) |
                        (static_cast<std::uint64_t>(max_ku) << 40) |
                        (static_cast<std::uint64_t>(c) << 56);
    auto it = exponent_cache_.find(key);
    if (it != exponent_cache_.end()) return it->second;

    ExponentProblem pr;
    pr.r1t = 2.0 / params_.n_s * log_choose_ms(b_s_, static_cast<double>(max_ku), t_prime);
    pr.r2t = 2.0 / params_.n_s * log_binomial_coeff(min_ko, t);
    pr.pp = params_.P_s_prime;
    pr.t = t;
    pr.tp = t_prime;
    pr.cpp = c * params_.P_s_prime;

    // Coarse scan with a loose inner search, then coordinate ascent. Any
    // feasible point already yields a valid exponent; the refinement only
    // tightens it.
    double best = 0.0;  // rho2 = 0 floor
    double b_r1 = 1.0, b_r2 = 1.0, b_ll = 0.0;
    auto try_point = [&](double r1, double r2, double tol) {
        double ll;
        double v = inner_lambda_max(pr, r1, r2, tol, &ll);
        v -= 0.0;
        if (v > best) {
            best = v;
            b_r1 = r1;
            b_r2 = r2;
            b_ll = ll;
        }
    };
    static const double grid[] = {0.05, 0.25, 0.5, 0.75, 1.0};
    for (double r1 : grid)
        for (double r2 : grid) try_point(r1, r2, 0.05);
    if (warm_valid_) {
        double v = pr.eval(warm_rho1_, warm_rho2_, std::exp(warm_loglam_));
        if (v > best) {
            best = v;
            b_r1 = warm_rho1_;
            b_r2 = warm_rho2_;
            b_ll = warm_loglam_;
        }
    }
    for (int sweep = 0; sweep < 4; ++sweep) {
        double prev = best;
        {
            ScalarSearchSpec s{kLogLamLo, kLogLamHi, 1e-7, 90};
            auto obj = [&](double ll) { return -pr.eval(b_r1, b_r2, std::exp(ll)); };
            ScalarMinResult r = golden_section_min_t(obj, s);
            if (-r.min > best) { best = -r.min; b_ll = r.argmin; }
        }
        {
            ScalarSearchSpec s{0.0, 1.0, 1e-7, 90};
            auto obj = [&](double r1) { return -pr.eval(r1, b_r2, std::exp(b_ll)); };
            ScalarMinResult r = golden_section_min_t(obj, s);
            if (-r.min > best) { best = -r.min; b_r1 = r.argmin; }
        }
        {
            ScalarSearchSpec s{0.0, 1.0, 1e-7, 90};
            auto obj = [&](double r2) { return -pr.eval(b_r1, r2, std::exp(b_ll)); };
            ScalarMinResult r = golden_section_min_t(obj, s);
            if (-r.min > best) { best = -r.min; b_r2 = r.argmin; }
        }
        if (best - prev < 1e-9 && sweep >= 1) break;
    }
    warm_rho1_ = b_r1;
    warm_rho2_ = b_r2;
    warm_loglam_ = b_ll;
    warm_valid_ = true;

    double e = std::max(0.0, best);
    exponent_cache_.emplace(key, e);
    return e;
}

double StdBlockEval::p_tt(int t, int t_prime, int k_s, int k_s_prime) {
    double e = error_exponent(t, t_prime, k_s, k_s_prime);
    return clamp01(std::exp(-0.5 * params_.n_s * e));
}

double StdBlockEval::p_t(int t, const TTPrimeGrid& grid) {
    auto [lo, hi] = grid.t_bar_set[t];
    double acc = 0.0;
    for (int tp = lo; tp <= hi; ++tp) acc += p_tt(t, tp, grid.k_s, grid.k_s_prime);
    return clamp01(acc);
}

// ---------------------------------------------------------------------------
// dependence-testing q terms (subset Monte Carlo, desk scale only)
// ---------------------------------------------------------------------------

QTermResult StdBlockEval::q_terms(int t, const TTPrimeGrid& grid, std::uint64_t stream) {
    QTermResult out;
    auto [bar_lo, bar_hi] = grid.t_bar_set[t];
    out.q_tt.assign(std::max(0, bar_hi - bar_lo + 1), 1.0);
    if (!settings_.enable_q_terms) return out;

    int k_s = grid.k_s;
    int pool_sz = k_s - grid.c_md;  // candidates for W_2'
    if (t > pool_sz) return out;
    double n_subsets = std::exp(log_binomial_coeff(pool_sz, t));
    if (n_subsets > static_cast<double>(settings_.subset_budget)) return out;

    int n_s = params_.n_s;
    double pp = params_.P_s_prime;
    double tau_pp = (t + grid.c_md) * pp;
    int n_phantom = pos(grid.underline - k_s);  // |W_1'|

    std::uint64_t samples = settings_.q_samples;
    std::vector<double> stats(samples);
    Rng rng(mc_.seed, mc_.stream(0x71u, stream));
    std::vector<double> base(n_s), w1(n_s);
    std::vector<std::vector<double>> cw(k_s, std::vector<double>(n_s));
    std::vector<int> pick(std::max(t, 1));

    for (std::uint64_t it = 0; it < samples; ++it) {
        for (auto& c : cw)
            for (auto& x : c) x = rng.normal() * std::sqrt(pp);
        // base = c([c_md]) + Z ; w1 = c(W_1')
        for (int i = 0; i < n_s; ++i) {
            double b = rng.normal();
            for (int u = 0; u < grid.c_md; ++u) b += cw[u][i];
            base[i] = b;
        }
        std::fill(w1.begin(), w1.end(), 0.0);
        for (int u = 0; u < n_phantom; ++u)
            for (int i = 0; i < n_s; ++i) w1[i] += rng.normal() * std::sqrt(pp);

        // min over W_2' subsets of ||base + c(W_2')||^2 (t == 0 collapses to
        // the single empty subset)
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < t; ++j) pick[j] = j;
        for (;;) {
            double nrm = 0.0;
            for (int i = 0; i < n_s; ++i) {
                double v = base[i];
                for (int j = 0; j < t; ++j) v += cw[grid.c_md + pick[j]][i];
                nrm += v * v;
            }
            best = std::min(best, nrm);
            int j = t - 1;
            while (j >= 0 && pick[j] == pool_sz - t + j) --j;
            if (j < 0) break;
            ++pick[j];
            for (int l = j + 1; l < t; ++l) pick[l] = pick[l - 1] + 1;
        }
        double resid = 0.0;
        for (int i = 0; i < n_s; ++i) {
            double v = base[i] - w1[i];
            resid += v * v;
        }
        stats[it] = 0.5 * n_s * std::log1p(tau_pp) + 0.5 * best / (1.0 + tau_pp) - 0.5 * resid;
    }
    std::sort(stats.begin(), stats.end());

    int underline = grid.underline, overline = grid.overline;
    int max_ku = std::max(k_s, underline);
    double l2 = log_binomial_coeff(std::min(k_s, overline), t);
    auto p_le = [&](double gamma) {
        auto it2 = std::upper_bound(stats.begin(), stats.end(), gamma);
        std::uint64_t hits = static_cast<std::uint64_t>(it2 - stats.begin());
        return binomial_upper_confidence(static_cast<long long>(hits),
                                         static_cast<long long>(samples), mc_.confidence);
    };
    // candidate thresholds: sampled quantiles plus the analytic point
    std::vector<double> cand;
    std::size_t step = std::max<std::size_t>(1, stats.size() / 1000);
    for (std::size_t i = 0; i < stats.size(); i += step) cand.push_back(stats[i]);

    auto optimize = [&](const std::vector<double>& log_counts) {
        double best_q = 1.0;
        std::vector<double> c2 = cand;
        for (double lc : log_counts)
            c2.push_back(lc + std::log(static_cast<double>(samples)));
        for (double g : c2) {
            double tail = 0.0;
            for (double lc : log_counts) tail += std::exp(lc - g);
            best_q = std::min(best_q, p_le(g) + tail);
        }
        return clamp01(best_q);
    };

    std::vector<double> all_counts;
    for (int tp = bar_lo; tp <= bar_hi; ++tp) {
        double l1 = log_choose_ms(b_s_, static_cast<double>(max_ku), tp);
        out.q_tt[tp - bar_lo] = optimize({l1 + l2});
        all_counts.push_back(l1 + l2);
    }
    out.q_t = all_counts.empty() ? 1.0 : optimize(all_counts);
    out.skipped = false;
    return out;
}

// ---------------------------------------------------------------------------
// xi, nu1, assembly
// ---------------------------------------------------------------------------

double StdBlockEval::xi(int k_s, int k_s_prime) const {
    double pp = params_.P_s_prime;
    if (pp <= 0.0) return 0.0;
    double sigma2 = 1.0 + k_s * pp;
    double v_target = 1.0 + k_s_prime * pp;
    double best = 1.0;
    // the minimizing competitor is adjacent to k_s' (monotone threshold)
    if (k_s_prime - 1 >= 0)
        best = std::min(best, prob_metric_greater(params_.n_s, v_target,
                                                  1.0 + (k_s_prime - 1) * pp, sigma2));
    if (k_s_prime + 1 <= K_)
        best = std::min(best, prob_metric_greater(params_.n_s, v_target,
                                                  1.0 + (k_s_prime + 1) * pp, sigma2));
    return best;
}

double nu1(const StandardBlockParams& params, long long K, double rho_s, double b_s) {
    double leak = binomial_window_leak(K, rho_s, params.k_s_lower, params.k_s_upper);
    // 1 - E[prob all K_s codewords distinct]
    long long mi = ms_as_int(b_s);
    double collision_defect = 0.0;
    double log_distinct = 0.0;
    double e_distinct = binomial_pmf(0, K, rho_s);
    for (long long k = 1; k <= K; ++k) {
        double step;
        if (mi >= 0) {
            step = (k - 1) < mi ? std::log1p(-static_cast<double>(k - 1) / static_cast<double>(mi))
                                : kNegInf;
        } else {
            step = -static_cast<double>(k - 1) * std::exp(-b_s * std::numbers::ln2_v<double>);
        }
        log_distinct += step;
        double pk = binomial_pmf(k, K, rho_s);
        if (log_distinct == kNegInf) {
            // all heavier k also collide for sure; remaining mass contributes 0
            e_distinct += 0.0;
        } else {
            e_distinct += pk * std::exp(log_distinct);
        }
        if (pk < 1e-30 && k > static_cast<long long>(rho_s * K) + 10) break;
    }
    collision_defect = std::max(0.0, 1.0 - e_distinct);
    double trunc = params.P_s_prime > 0.0
                       ? K * rho_s *
                             upper_incomplete_gamma_reg(
                                 0.5 * params.n_s, 0.5 * params.n_s * params.P_s / params.P_s_prime)
                       : 0.0;
    return clamp01(leak + collision_defect + trunc);
}

double StdBlockEval::nu1_value() const { return nu1(params_, K_, rho_s_, b_s_); }

StdBlockEval::PairTerms StdBlockEval::pair_contribution(int k_s, int k_s_prime) {
    PairTerms out;
    TTPrimeGrid grid = build_tt_grid(k_s, k_s_prime, params_, b_s_);
    if (grid.t_max < 0 || k_s <= 0) return out;
    double xi_v = xi(k_s, k_s_prime);

    // quick skip: everything below is bounded by xi times the weight mass
    double wsum_smd = 0.0;
    double wcount_sfp = 0.0;
    for (int t = 0; t <= grid.t_max; ++t) {
        wsum_smd += static_cast<double>(t + grid.c_md) / k_s;
        auto [lo, hi] = grid.t_set[t];
        if (hi >= lo) wcount_sfp += hi - lo + 1;
    }
    if (xi_v * (wsum_smd + wcount_sfp) < settings_.pair_tolerance) {
        out.smd = xi_v * wsum_smd;
        out.sfp = xi_v * wcount_sfp;
        return out;
    }

    auto exact_terms_at = [&](int t, PairTerms& acc) {
        double w_smd = static_cast<double>(t + grid.c_md) / k_s;
        QTermResult q;
        if (settings_.enable_q_terms)
            q = q_terms(t, grid, static_cast<std::uint64_t>(k_s) * 4096u + k_s_prime + t);
        else
            q.q_tt.assign(std::max(0, grid.t_bar_set[t].second - grid.t_bar_set[t].first + 1),
                          1.0);
        double p_t_v = p_t(t, grid);
        acc.smd += w_smd * std::min({p_t_v, q.q_t, xi_v});
        auto [lo, hi] = grid.t_set[t];
        auto [bar_lo, bar_hi] = grid.t_bar_set[t];
        for (int tp = lo; tp <= hi; ++tp) {
            double denom = static_cast<double>(k_s - t - grid.c_md + tp + grid.c_fp);
            double num = static_cast<double>(tp + grid.c_fp);
            double w_sfp = (num == 0.0 && denom == 0.0) ? 0.0 : num / denom;
            if (w_sfp == 0.0) continue;
            double p_v = p_tt(t, tp, grid.k_s, grid.k_s_prime);
            double q_v = 1.0;
            if (!q.skipped && tp >= bar_lo && tp <= bar_hi) q_v = q.q_tt[tp - bar_lo];
            acc.sfp += w_sfp * std::min({p_v, q_v, xi_v});
        }
    };

    if (grid.t_max <= 64 || params_.r_s != 0) {
        // small grids (and nonzero radii) are evaluated term by term
        for (int t = 0; t <= grid.t_max; ++t) exact_terms_at(t, out);
        return out;
    }

    // Large zero-radius grids: the index sets collapse to t' = t and the
    // exponent E(t,t) is smooth in t, so refine recursively. Unevaluated
    // stretches are charged conservatively at exp(-n/2 min(E_left, E_right)),
    // which can only enlarge the bound.
    auto exponent_at = [&](int t) { return error_exponent(t, t, k_s, k_s_prime); };
    // weights are increasing in t, so a stretch (lo, hi) exclusive is
    // bounded by count * w(hi-1) for SMD and by 1 per term for SFP
    std::function<void(int, double, int, double)> refine = [&](int lo, double e_lo, int hi,
                                                               double e_hi) {
        if (hi - lo <= 1) return;
        double p_cap = std::exp(-0.5 * params_.n_s * std::min(e_lo, e_hi));
        double bound_each = std::min(p_cap, xi_v);
        int count = hi - lo - 1;
        double w_top_smd = static_cast<double>(hi - 1 + grid.c_md) / k_s;
        double stretch = bound_each * count * std::max(w_top_smd, 1.0);
        if (stretch < 0.25 * settings_.pair_tolerance) {
            out.smd += bound_each * count * w_top_smd;
            out.sfp += bound_each * count;  // SFP weights are below one
            return;
        }
        int mid = lo + (hi - lo) / 2;
        double e_mid = exponent_at(mid);
        if (hi - lo <= 2) {
            PairTerms acc;
            exact_terms_at(mid, acc);
            out.smd += acc.smd;
            out.sfp += acc.sfp;
            return;
        }
        refine(lo, e_lo, mid, e_mid);
        PairTerms acc;
        exact_terms_at(mid, acc);
        out.smd += acc.smd;
        out.sfp += acc.sfp;
        refine(mid, e_mid, hi, e_hi);
    };

    int head = std::min(6, grid.t_max);
    for (int t = 0; t <= head; ++t) exact_terms_at(t, out);
    if (head < grid.t_max) {
        PairTerms tail;
        exact_terms_at(grid.t_max, tail);
        out.smd += tail.smd;
        out.sfp += tail.sfp;
        if (grid.t_max - head > 1)
            refine(head, exponent_at(head), grid.t_max, exponent_at(grid.t_max));
    }
    return out;
}

double StdBlockEval::eps_bar_smd(int k_s) {
    if (k_s <= 0) return 0.0;
    double acc = 0.0;
    for (int kp = params_.k_s_lower; kp <= params_.k_s_upper; ++kp)
        acc += pair_contribution(k_s, kp).smd;
    return clamp01(acc);
}

double StdBlockEval::eps_bar_sfp(int k_s) {
    double acc = 0.0;
    for (int kp = params_.k_s_lower; kp <= params_.k_s_upper; ++kp)
        acc += pair_contribution(k_s, kp).sfp;
    return clamp01(acc);
}

double StdBlockEval::eps_smd() {
    double total = nu1_value();
    for (int k_s = std::max(params_.k_s_lower, 1); k_s <= params_.k_s_upper; ++k_s) {
        double pk = binomial_pmf(k_s, K_, rho_s_);
        if (pk < 1e-18) continue;
        total += pk * eps_bar_smd(k_s);
        if (total >= 1.0) return 1.0;
    }
    return clamp01(total);
}

double StdBlockEval::eps_sfp() {
    double total = nu1_value();
    for (int k_s = params_.k_s_lower; k_s <= params_.k_s_upper; ++k_s) {
        double pk = binomial_pmf(k_s, K_, rho_s_);
        if (pk < 1e-18) continue;
        total += pk * eps_bar_sfp(k_s);
        if (total >= 1.0) return 1.0;
    }
    return clamp01(total);
}

}  // namespace uma
