#include "uma/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace uma {

namespace {

constexpr double kMildTarget = 0.1;

StandardBlockParams make_std_params(int n_s, double P_s, double P_s_prime, int kl, int ku) {
    StandardBlockParams p;
    p.n_s = n_s;
    p.P_s = P_s;
    p.P_s_prime = P_s_prime;
    p.k_s_lower = kl;
    p.k_s_upper = ku;
    p.r_s = 0;
    return p;
}

bool std_targets_met(const StandardBlockParams& p, long long K, double rho_s, double b_s,
                     const McSettings& mc) {
    StdBlockEval ev(p, b_s, K, rho_s, mc);
    if (ev.eps_smd() > kMildTarget) return false;
    return ev.eps_sfp() <= kMildTarget;
}

}  // namespace

double select_pprime(int n_block, double P, double leak_target) {
    if (!(leak_target > 0.0) || !(leak_target < 1.0))
        throw std::invalid_argument("select_pprime: leak target must be in (0,1)");
    // Q(n/2, n r / 2) is decreasing in the ratio r = P/P'; find the smallest
    // admissible ratio, i.e. the largest P'.
    auto leak_ok = [&](double ratio) {
        return upper_incomplete_gamma_reg(0.5 * n_block, 0.5 * n_block * ratio) < leak_target;
    };
    double hi = 2.0;
    while (!leak_ok(hi) && hi < 1e6) hi *= 2.0;
    double ratio = bisection_min_feasible([&](double r) { return leak_ok(r); }, 1.0, hi, 1e-9);
    ratio = std::max(ratio, 1.0 + 1e-12);
    return P / ratio;
}

std::pair<int, int> select_k_limits(long long K, double rho, double coverage_leak, int floor) {
    floor = std::max(0, floor);
    if (rho >= 1.0) return {static_cast<int>(K), static_cast<int>(K)};
    if (rho <= 0.0) return {floor, std::max(floor, 0)};
    double mean = static_cast<double>(K) * rho;
    double sd = std::sqrt(mean * (1.0 - rho));
    int lo0 = std::max<long long>(0, static_cast<long long>(mean - 25.0 * sd - 10.0));
    int hi0 = static_cast<int>(std::min<long long>(K, static_cast<long long>(mean + 25.0 * sd + 10.0)));
    std::vector<double> pmf(hi0 - lo0 + 1);
    for (int k = lo0; k <= hi0; ++k) pmf[k - lo0] = binomial_pmf(k, K, rho);
    std::vector<double> lower_tail(pmf.size() + 1, 0.0);  // mass strictly below lo0+i
    double below_lo0 = binomial_window_leak(K, rho, lo0, static_cast<int>(K));
    lower_tail[0] = below_lo0;
    for (std::size_t i = 0; i < pmf.size(); ++i) lower_tail[i + 1] = lower_tail[i] + pmf[i];
    double total = lower_tail.back() +
                   binomial_window_leak(K, rho, 0, hi0);  // upper leak beyond hi0
    (void)total;
    auto window_leak = [&](int kl, int ku) {
        double below = kl <= lo0 ? (kl == 0 ? 0.0 : below_lo0) : lower_tail[kl - lo0];
        double inside_hi = lower_tail[std::min<int>(ku + 1 - lo0, static_cast<int>(pmf.size()))];
        double above = 1.0 - inside_hi;
        return (kl == 0 ? 0.0 : below) + std::max(0.0, above);
    };

    int best_kl = -1, best_ku = -1;
    int ku = std::max(floor, lo0);
    for (int kl = std::max(floor, lo0); kl <= hi0; ++kl) {
        if (ku < kl) ku = kl;
        while (ku <= hi0 && window_leak(kl, ku) > coverage_leak) ++ku;
        if (ku > hi0) break;
        if (best_kl < 0 || ku - kl < best_ku - best_kl) {
            best_kl = kl;
            best_ku = ku;
        }
    }
    if (best_kl < 0) {
        // floor makes the target unreachable; take the widest useful window
        int k_hi = hi0;
        while (k_hi > floor && window_leak(floor, k_hi - 1) <= coverage_leak) --k_hi;
        return {floor, std::max(k_hi, floor)};
    }
    return {best_kl, best_ku};
}

double standard_leak_target(long long K, double rho_s, double eps_amd_target, bool nonorthogonal) {
    if (!nonorthogonal) return 1e-8;
    double users = std::max(1.0, static_cast<double>(K) * rho_s);
    return std::min(1e-5, 0.01 * eps_amd_target / users);
}

EbnoStarResult ebno_s_star(long long K, const SystemConfig& config, const McSettings& mc) {
    EbnoStarResult out;
    auto [kl, ku] = select_k_limits(K, config.rho_s, 1e-10, 0);
    if (ku <= kl) ku = kl + 1;
    out.k_s_lower = kl;
    out.k_s_upper = ku;
    double leak = standard_leak_target(K, config.rho_s, config.eps_amd_target, false);
    auto feasible_at_db = [&](double ebno_db) {
        double P_s = 2.0 * config.b_s * db_to_lin(ebno_db) / config.n;
        double pp = select_pprime(config.n, P_s, leak);
        return std_targets_met(make_std_params(config.n, P_s, pp, kl, ku), K, config.rho_s,
                               config.b_s, mc);
    };
    double db = bisection_min_feasible(feasible_at_db, -10.0, 15.0, 0.01);
    out.ebno_db = db;
    out.P_s = 2.0 * config.b_s * db_to_lin(db) / config.n;
    return out;
}

NsMinResult find_ns_min(double delta_db, long long K, const SystemConfig& config,
                        const McSettings& mc, const std::optional<EbnoStarResult>& precomputed) {
    EbnoStarResult star = precomputed ? *precomputed : ebno_s_star(K, config, mc);
    NsMinResult out;
    out.ebno_s_star_db = star.ebno_db;
    double energy = 2.0 * config.b_s * db_to_lin(star.ebno_db + delta_db);
    double leak = standard_leak_target(K, config.rho_s, config.eps_amd_target, false);
    auto feasible = [&](int n_s) {
        double P_s = energy / n_s;
        double pp = select_pprime(n_s, P_s, leak);
        return std_targets_met(make_std_params(n_s, P_s, pp, star.k_s_lower, star.k_s_upper), K,
                               config.rho_s, config.b_s, mc);
    };
    if (!feasible(config.n)) {
        out.n_s_min = config.n;
        out.n_a_max = 0;
        out.P_s_at_ns_min = energy / config.n;
        return out;
    }
    int lo = 1, hi = config.n;  // infeasible at lo (n_s = 1 cannot carry the load), feasible at hi
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    out.n_s_min = hi;
    out.n_a_max = config.n - hi;
    out.P_s_at_ns_min = energy / hi;
    return out;
}

// ---------------------------------------------------------------------------
// orthogonal alarm optimization
// ---------------------------------------------------------------------------

namespace {

struct HomaFeasibilityProbe {
    long long K;
    const SystemConfig* config;
    const McSettings* mc;
    double rho_d;
    int n_a;
    RcusSamplePool* pool;
    const ResultCache* cache = nullptr;

    AlarmBlockParams make_params(double P_a) const {
        AlarmBlockParams p;
        p.n_a = n_a;
        p.P_a = P_a;
        p.P_a_prime = select_pprime(n_a, P_a, 1e-8);
        p.rho_d = rho_d;
        auto [kl, ku] = select_k_limits(K, rho_d, 1e-10, 2);
        if (ku <= kl) {  // the theorem needs a window of width >= 1
            if (kl > 2)
                --kl;
            else
                ++ku;
        }
        p.k_a_lower = kl;
        p.k_a_upper = std::max(ku, kl + 1);
        return p;
    }

    std::string cache_key(const AlarmBlockParams& p) const {
        std::string s = "alarm_gamma_table|";
        s += std::to_string(p.n_a) + "|" + canon_double(p.P_a) + "|" +
             canon_double(p.P_a_prime) + "|" + canon_double(p.rho_d) + "|" +
             std::to_string(p.k_a_lower) + ":" + std::to_string(p.k_a_upper) + "|" +
             std::to_string(config->M_a) + "|" + std::to_string(K) + "|" +
             std::to_string(mc->samples) + "|" + std::to_string(mc->seed) + "|" +
             canon_double(mc->confidence) + "|" + canon_double(config->eps_amd_target) + "|" +
             canon_double(config->eps_afp_target);
        return s;
    }

    bool feasible(double P_a, AlarmBoundDiagnostics* diag_out = nullptr) const {
        AlarmBlockParams p = make_params(P_a);
        std::string key;
        if (cache && cache->enabled()) {
            key = cache_key(p);
            if (auto hit = cache->get(key)) {
                nlohmann::json j = nlohmann::json::parse(*hit, nullptr, false);
                if (!j.is_discarded() && j.contains("eps_amd")) {
                    if (diag_out) {
                        diag_out->eps_amd = j["eps_amd"].get<double>();
                        diag_out->eps_afp = j["eps_afp"].get<double>();
                        diag_out->nu0 = j.value("nu0", 0.0);
                    }
                    return j["feasible"].get<bool>();
                }
            }
        }
        double afp = eps_afp_homa(p, config->M_a, nullptr, config->eps_afp_target);
        bool ok;
        AlarmBoundDiagnostics d;
        if (afp > config->eps_afp_target) {
            d.eps_afp = afp;
            ok = false;
        } else {
            d = eps_amd_homa(p, *config, *mc, *pool, config->eps_amd_target);
            d.eps_afp = afp;
            ok = d.eps_amd <= config->eps_amd_target;
        }
        if (diag_out) *diag_out = d;
        if (cache && cache->enabled()) {
            nlohmann::json j;
            j["cache_key"] = key;
            j["feasible"] = ok;
            j["eps_amd"] = d.eps_amd;
            j["eps_afp"] = d.eps_afp;
            j["nu0"] = d.nu0;
            nlohmann::json table = nlohmann::json::array();
            for (const auto& [kk, gv] : d.gamma_amd_table) {
                table.push_back({{"k_a", kk.first},
                                 {"k_hat", kk.second},
                                 {"mean", gv.mean},
                                 {"upper", gv.upper},
                                 {"chernoff", gv.chernoff},
                                 {"value", gv.value},
                                 {"s", gv.s_opt},
                                 {"hits", gv.hits},
                                 {"samples", gv.samples}});
            }
            j["gamma_amd_table"] = std::move(table);
            cache->put(key, j.dump());
        }
        return ok;
    }
};

}  // namespace

OptimizationResult min_alarm_ebno_homa(long long K, int n_a_max, const ScenarioConfig& scenario,
                                       const SystemConfig& config, const McSettings& mc,
                                       const std::optional<EbnoStarResult>& precomputed,
                                       const ResultCache* cache) {
    OptimizationResult out;
    EbnoStarResult star = precomputed ? *precomputed : ebno_s_star(K, config, mc);
    out.ebno_s_star_db = star.ebno_db;
    out.n_a_max = n_a_max;
    out.n_s_min = config.n - n_a_max;
    // Standard power for the dynamic-range constraint: the backoff energy
    // spread over the frame.
    double P_s = 2.0 * config.b_s * db_to_lin(star.ebno_db + scenario.delta_backoff_db) / config.n;
    out.P_s = P_s;
    double psi_lin = std::isinf(scenario.psi_dynamic_range_db)
                         ? std::numeric_limits<double>::infinity()
                         : db_to_lin(scenario.psi_dynamic_range_db);
    double p_a_floor = std::isinf(psi_lin) ? 0.0 : P_s / psi_lin;
    double rho_floor = rho_d_floor(K, config.eps_amd_target) * (1.0 + 1e-6);
    if (rho_floor > scenario.rho_d_max) {
        out.feasibility = false;
        out.binding_constraint = "rho_d_max below the misdetection floor";
        return out;
    }

    RcusSamplePool pool;
    int pool_dim = -1;
    auto ensure_pool = [&](int n_a) {
        if (pool_dim != n_a) {
            pool.generate(n_a, mc.samples, mc.seed, mc.workers);
            pool_dim = n_a;
        }
    };

    struct Best {
        double ebno_db = std::numeric_limits<double>::infinity();
        int n_a = 0;
        double P_a = 0.0, rho_d = 0.0;
    } best;

    // For a fixed (n_a, rho_d): smallest feasible P_a via bisection in dB.
    // The block energy n_a P_a is roughly invariant near the optimum, so the
    // warm start carries the energy across blocklength changes.
    double warm_energy_db = std::numeric_limits<double>::quiet_NaN();
    auto min_pa = [&](int n_a, double rho_d) -> double {
        ensure_pool(n_a);
        HomaFeasibilityProbe probe{K, &config, &mc, rho_d, n_a, &pool, cache};
        double na_db = lin_to_db(static_cast<double>(n_a));
        double db_min = p_a_floor > 0.0 ? lin_to_db(p_a_floor) : -110.0;
        double warm_db = warm_energy_db - na_db;
        double lo_db = std::max(db_min, std::isnan(warm_db) ? -95.0 : warm_db - 10.0);
        double hi_db = std::max(db_min, std::isnan(warm_db) ? 45.0 : warm_db + 10.0);
        auto ok_db = [&](double db) { return probe.feasible(std::pow(10.0, db / 10.0)); };
        while (!ok_db(hi_db)) {
            hi_db += 15.0;
            if (hi_db > 46.0) return std::numeric_limits<double>::quiet_NaN();
        }
        if (ok_db(lo_db)) {
            while (lo_db > db_min && ok_db(std::max(db_min, lo_db - 10.0)))
                lo_db = std::max(db_min, lo_db - 10.0);
            if (lo_db <= db_min) {
                warm_energy_db = db_min + na_db;
                // the floor itself is feasible (dynamic-range clamp or the
                // configured power bracket edge)
                return std::pow(10.0, db_min / 10.0);
            }
            lo_db = std::max(db_min, lo_db - 10.0);
        }
        double db = bisection_min_feasible(ok_db, lo_db, hi_db, 0.02);
        warm_energy_db = db + na_db;
        return std::pow(10.0, db / 10.0);
    };

    auto objective_at = [&](int n_a, double rho_d) -> double {
        double pa = min_pa(n_a, rho_d);
        if (!(pa > 0.0) || !std::isfinite(pa)) return std::numeric_limits<double>::infinity();
        double e = ebno_alarm_homa(n_a, pa, rho_d, K, config.M_a);
        if (e < best.ebno_db) best = {e, n_a, pa, rho_d};
        return e;
    };

    // sequential protocol: golden over n_a at the sensitivity ceiling first
    // (the unconstrained optimum sits there), then golden over rho_d at the
    // incumbent blocklength, then a short blocklength refinement if the
    // interior rho won.
    int lo_na = 2;
    if (n_a_max < lo_na) {
        out.feasibility = false;
        out.binding_constraint = "no channel uses left for the alarm block";
        return out;
    }
    auto golden_na = [&](int lo, int hi, double rho, double tol, int iters) {
        ScalarSearchSpec na_spec{std::log(static_cast<double>(lo)),
                                 std::log(static_cast<double>(hi)), tol, iters};
        auto f_na = [&](double ln_na) {
            int n_a = std::clamp(static_cast<int>(std::lround(std::exp(ln_na))), lo, hi);
            return objective_at(n_a, rho);
        };
        ScalarMinResult cont = golden_section_min_t(f_na, na_spec);
        int center = std::clamp(static_cast<int>(std::lround(std::exp(cont.argmin))), lo, hi);
        for (int d = -2; d <= 2; ++d) objective_at(std::clamp(center + d, lo, hi), rho);
    };
    golden_na(lo_na, n_a_max, scenario.rho_d_max, 0.05, 9);

    double span = scenario.rho_d_max - rho_floor;
    if (span > 1e-12 && best.n_a > 0) {
        double probe_rho = std::max(rho_floor, scenario.rho_d_max * 0.7);
        double at_probe = probe_rho < scenario.rho_d_max
                              ? objective_at(best.n_a, probe_rho)
                              : std::numeric_limits<double>::infinity();
        if (at_probe < best.ebno_db + 1e-12 || p_a_floor > 0.0) {
            for (int round = 0; round < 2; ++round) {
                int n_a_inc = best.n_a;
                double rho_inc = best.rho_d;
                ScalarSearchSpec spec{rho_floor, scenario.rho_d_max,
                                      std::max(1e-7, 0.02 * span), 7};
                auto f = [&](double rho) { return objective_at(n_a_inc, rho); };
                try {
                    golden_section_min_t(f, spec);
                } catch (const std::runtime_error&) {
                }
                if (best.rho_d != scenario.rho_d_max || best.n_a != n_a_inc) {
                    int lo = std::max(lo_na, static_cast<int>(0.5 * best.n_a));
                    int hi = std::min(n_a_max, std::max(lo + 1, static_cast<int>(2.0 * best.n_a)));
                    golden_na(lo, hi, best.rho_d, 0.04, 7);
                }
                if (best.n_a == n_a_inc && best.rho_d == rho_inc) break;
            }
        }
    }

    if (!std::isfinite(best.ebno_db)) {
        out.feasibility = false;
        out.binding_constraint = "reliability targets unreachable within the power bracket";
        return out;
    }
    out.n_a_opt = best.n_a;
    out.P_a_opt = best.P_a;
    out.rho_d_opt = best.rho_d;
    out.ebno_a_db = best.ebno_db;
    out.feasibility = true;

    // re-evaluate the bound values at the optimum for the report
    ensure_pool(best.n_a);
    HomaFeasibilityProbe probe{K, &config, &mc, best.rho_d, best.n_a, &pool, nullptr};
    AlarmBlockParams p = probe.make_params(best.P_a);
    out.P_a_prime_opt = p.P_a_prime;
    AlarmBoundDiagnostics d = eps_amd_homa(p, config, mc, pool, 0.0);
    out.eps_amd = d.eps_amd;
    out.eps_afp = eps_afp_homa(p, config.M_a, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// nonorthogonal modes
// ---------------------------------------------------------------------------

OptimizationResult min_alarm_ebno_hnoma(long long K, const ScenarioConfig& scenario,
                                        const SystemConfig& config, const McSettings& mc,
                                        const std::optional<EbnoStarResult>& precomputed) {
    OptimizationResult out;
    EbnoStarResult star = precomputed ? *precomputed : ebno_s_star(K, config, mc);
    out.ebno_s_star_db = star.ebno_db;
    out.n_a_max = config.n;
    out.n_s_min = config.n;
    out.n_a_opt = config.n;
    double P_s = 2.0 * config.b_s * db_to_lin(star.ebno_db + scenario.delta_backoff_db) / config.n;
    out.P_s = P_s;
    double leak_s = standard_leak_target(K, config.rho_s, config.eps_amd_target, true);
    double P_s_prime = select_pprime(config.n, P_s, leak_s);
    auto [ksl, ksu] = select_k_limits(K, config.rho_s, 1e-10, 0);
    if (ksu <= ksl) ksu = ksl + 1;

    RcusSamplePool pool;
    pool.generate(config.n, mc.samples, mc.seed, mc.workers);

    auto make_params = [&](double rho_d, double P_a) {
        HnomaParams hp;
        hp.n = config.n;
        hp.alarm.n_a = config.n;
        hp.alarm.P_a = P_a;
        hp.alarm.P_a_prime = select_pprime(config.n, P_a, 1e-8);
        hp.alarm.rho_d = rho_d;
        auto [kal, kau] = select_k_limits(K, rho_d, 1e-10, 1);
        if (kau <= kal) {
            if (kal > 1)
                --kal;
            else
                ++kau;
        }
        hp.alarm.k_a_lower = kal;
        hp.alarm.k_a_upper = std::max(kau, kal + 1);
        hp.standard = make_std_params(config.n, P_s, P_s_prime, ksl, ksu);
        return hp;
    };

    auto feasible = [&](double rho_d, double P_a, HnomaBoundDiagnostics* diag_out = nullptr) {
        if (P_a + P_s > config.P) return false;
        HnomaParams hp = make_params(rho_d, P_a);
        HnomaEval ev(hp, config, mc, pool);
        HnomaBoundDiagnostics d = ev.evaluate(true);
        if (diag_out) *diag_out = d;
        return d.feasible;
    };

    double rho_floor = rho_d_floor(K, config.eps_amd_target) * (1.0 + 1e-6);
    if (scenario.hnoma_mode == HnomaMode::rho_d_one) {
        out.rho_d_opt = 1.0;
        auto ok_db = [&](double db) { return feasible(1.0, std::pow(10.0, db / 10.0)); };
        double hi_db = lin_to_db(std::max(1e-12, config.P - P_s));
        if (!ok_db(hi_db)) {
            out.feasibility = false;
            out.binding_constraint = "infeasible at the full remaining power";
            return out;
        }
        double db = bisection_min_feasible(ok_db, -110.0, hi_db, 0.02);
        out.P_a_opt = std::pow(10.0, db / 10.0);
    } else if (scenario.hnoma_mode == HnomaMode::equal_power) {
        out.P_a_opt = P_s;
        auto ok_rho = [&](double rho) { return feasible(rho, P_s); };
        if (!ok_rho(scenario.rho_d_max)) {
            out.feasibility = false;
            out.binding_constraint = "infeasible even at rho_d_max";
            return out;
        }
        out.rho_d_opt =
            bisection_min_feasible(ok_rho, rho_floor, scenario.rho_d_max, 1e-3 * rho_floor);
    } else {
        // free mode: golden over rho_d of the rho_d_one-style power search;
        // expected infeasible at small backoffs.
        double best_e = std::numeric_limits<double>::infinity();
        double best_rho = 0.0, best_pa = 0.0;
        for (double rho : {scenario.rho_d_max, 0.5 * scenario.rho_d_max,
                           std::max(rho_floor, 0.1 * scenario.rho_d_max)}) {
            auto ok_db = [&](double db) { return feasible(rho, std::pow(10.0, db / 10.0)); };
            double hi_db = lin_to_db(std::max(1e-12, config.P - P_s));
            if (!ok_db(hi_db)) continue;
            double db = bisection_min_feasible(ok_db, -110.0, hi_db, 0.05);
            double pa = std::pow(10.0, db / 10.0);
            double e = ebno_hnoma(config.n, pa, rho, log2_message_count(config.M_a), K);
            if (e < best_e) {
                best_e = e;
                best_rho = rho;
                best_pa = pa;
            }
        }
        if (!std::isfinite(best_e)) {
            out.feasibility = false;
            out.binding_constraint = "free mode infeasible at this backoff";
            return out;
        }
        out.rho_d_opt = best_rho;
        out.P_a_opt = best_pa;
    }

    out.ebno_a_db =
        ebno_hnoma(config.n, out.P_a_opt, out.rho_d_opt, log2_message_count(config.M_a), K);
    HnomaBoundDiagnostics d;
    feasible(out.rho_d_opt, out.P_a_opt, &d);
    out.feasibility = d.feasible;
    out.P_a_prime_opt = select_pprime(config.n, out.P_a_opt, 1e-8);
    out.eps_amd = d.eps_amd;
    out.eps_afp = d.eps_afp;
    out.eps_smd = d.eps_smd;
    out.eps_sfp = d.eps_sfp;
    if (!d.feasible) out.binding_constraint = d.binding_constraint;
    return out;
}

}  // namespace uma
