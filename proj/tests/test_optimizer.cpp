#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uma/optimizer.hpp"

using namespace uma;

TEST_CASE("select_pprime") {
    SUBCASE("meets the leak target tightly") {
        for (int n : {151, 3000, 30000}) {
            for (double target : {1e-5, 1e-8}) {
                double P = 0.037;
                double pp = select_pprime(n, P, target);
                CHECK(pp < P);
                double q = upper_incomplete_gamma_reg(0.5 * n, 0.5 * n * P / pp);
                CHECK(q <= target);
                // bracketing: slightly larger P' violates the target
                double q_up = upper_incomplete_gamma_reg(0.5 * n, 0.5 * n * P / (1.01 * pp));
                CHECK(q_up > target);
            }
        }
    }

    SUBCASE("loose targets saturate near P") {
        double pp = select_pprime(2, 1.0, 0.5);
        CHECK(pp <= 1.0);
        CHECK(upper_incomplete_gamma_reg(1.0, 1.0 / pp) < 0.5);
    }
}

TEST_CASE("select_k_limits") {
    SUBCASE("degenerate activity") {
        auto [kl, ku] = select_k_limits(50, 1.0, 1e-10, 2);
        CHECK(kl == 50);
        CHECK(ku == 50);
    }

    SUBCASE("matches exhaustive window search") {
        long long K = 10;
        double rho = 0.5, leak = 1e-3;
        auto [kl, ku] = select_k_limits(K, rho, leak, 0);
        int best_w = 1000, best_kl = -1, best_ku = -1;
        for (int a = 0; a <= K; ++a) {
            for (int b = a; b <= K; ++b) {
                double mass = 0.0;
                for (int k = a; k <= b; ++k) mass += binomial_pmf(k, K, rho);
                if (1.0 - mass <= leak && b - a < best_w) {
                    best_w = b - a;
                    best_kl = a;
                    best_ku = b;
                }
            }
        }
        CHECK(ku - kl == best_w);
        CHECK(kl == best_kl);
        CHECK(ku == best_ku);
    }

    SUBCASE("coverage holds and the window is tight") {
        for (long long K : {1000, 30000}) {
            for (double rho : {0.01, 0.001}) {
                auto [kl, ku] = select_k_limits(K, rho, 1e-10, 0);
                CHECK(binomial_window_leak(K, rho, kl, ku) <= 1e-10);
                if (kl > 0) CHECK(binomial_window_leak(K, rho, kl + 1, ku) > 1e-10);
            }
        }
    }

    SUBCASE("floor can make the target unreachable") {
        // K = 2500, rho = 0.01: the mass below 2 alone exceeds 1e-10
        auto [kl, ku] = select_k_limits(2500, 0.01, 1e-10, 2);
        CHECK(kl == 2);
        CHECK(ku > kl);
        CHECK(binomial_window_leak(2500, 0.01, 0, ku) <= 1e-10);
    }
}

TEST_CASE("standard leak target") {
    CHECK(standard_leak_target(1000, 0.01, 1e-5, false) == doctest::Approx(1e-8));
    // nonorthogonal: scaled so K rho_s Q stays well under the alarm target
    double t = standard_leak_target(1000, 0.01, 1e-5, true);
    CHECK(t * 1000 * 0.01 <= 0.011 * 1e-5);
}

TEST_CASE("tiny end-to-end searches") {
    // a desk-scale system keeps these fast while exercising the full path;
    // kept flat so the expensive searches run exactly once
    SystemConfig cfg;
    cfg.K = 40;
    cfg.n = 400;
    cfg.M_a = 4;
    cfg.b_s = 12.0;
    cfg.rho_s = 0.2;
    cfg.rho_d_max = 1.0;
    cfg.P = 10.0;
    cfg.eps_amd_target = 1e-2;
    cfg.eps_afp_target = 1e-2;
    McSettings mc;
    mc.samples = 50000;
    mc.seed = 19;

    EbnoStarResult star = ebno_s_star(cfg.K, cfg, mc);
    CHECK(std::isfinite(star.ebno_db));
    CHECK(star.P_s > 0.0);

    // ns_min is monotone in the backoff
    NsMinResult a = find_ns_min(0.0, cfg.K, cfg, mc, star);
    NsMinResult b = find_ns_min(0.5, cfg.K, cfg, mc, star);
    CHECK(a.n_s_min >= b.n_s_min);
    CHECK(a.n_a_max <= b.n_a_max);
    // boundary sharpness: one fewer channel use fails
    double energy = 2.0 * cfg.b_s * db_to_lin(star.ebno_db);
    if (a.n_s_min > 1) {
        double P_bad = energy / (a.n_s_min - 1);
        double pp = select_pprime(a.n_s_min - 1, P_bad, 1e-8);
        StandardBlockParams sp;
        sp.n_s = a.n_s_min - 1;
        sp.P_s = P_bad;
        sp.P_s_prime = pp;
        sp.k_s_lower = star.k_s_lower;
        sp.k_s_upper = star.k_s_upper;
        StdBlockEval ev(sp, cfg.b_s, cfg.K, cfg.rho_s, mc);
        CHECK(std::max(ev.eps_smd(), ev.eps_sfp()) > 0.1);
    }

    // alarm optimization returns a feasible point
    ScenarioConfig scen;
    scen.rho_d_max = 1.0;
    NsMinResult ns = find_ns_min(scen.delta_backoff_db, cfg.K, cfg, mc, star);
    REQUIRE(ns.n_a_max > 2);
    OptimizationResult r = min_alarm_ebno_homa(cfg.K, ns.n_a_max, scen, cfg, mc, star);
    REQUIRE(r.feasibility);
    CHECK(r.n_a_opt >= 2);
    CHECK(r.n_a_opt <= ns.n_a_max);
    CHECK(r.eps_amd <= cfg.eps_amd_target);
    CHECK(r.eps_afp <= cfg.eps_afp_target);
    CHECK(r.rho_d_opt <= scen.rho_d_max + 1e-12);
    CHECK(r.rho_d_opt >= rho_d_floor(cfg.K, cfg.eps_amd_target));

    // conservativeness re-check with a doubled budget
    {
        McSettings mc2 = mc;
        mc2.samples *= 2;
        RcusSamplePool pool;
        pool.generate(r.n_a_opt, mc2.samples, mc2.seed, 1);
        AlarmBlockParams p;
        p.n_a = r.n_a_opt;
        p.P_a = r.P_a_opt;
        p.P_a_prime = r.P_a_prime_opt;
        p.rho_d = r.rho_d_opt;
        auto [kl, ku] = select_k_limits(cfg.K, r.rho_d_opt, 1e-10, 2);
        p.k_a_lower = kl;
        p.k_a_upper = std::max(ku, kl + 1);
        AlarmBoundDiagnostics d = eps_amd_homa(p, cfg, mc2, pool);
        CHECK(d.eps_amd <= cfg.eps_amd_target * 1.25);
    }

    // dynamic-range filter binds
    {
        ScenarioConfig dr = scen;
        dr.psi_dynamic_range_db = 0.0;
        OptimizationResult r3 = min_alarm_ebno_homa(cfg.K, ns.n_a_max, dr, cfg, mc, star);
        if (r3.feasibility) {
            CHECK(r3.P_a_opt >= r3.P_s * (1.0 - 1e-9));
            CHECK(r3.ebno_a_db >= r.ebno_a_db - 0.1);
        }
    }

    // a tighter sensitivity ceiling cannot improve the optimum
    {
        ScenarioConfig tight = scen;
        tight.rho_d_max = 0.6;
        OptimizationResult r2 = min_alarm_ebno_homa(cfg.K, ns.n_a_max, tight, cfg, mc, star);
        if (r2.feasibility) CHECK(r.ebno_a_db <= r2.ebno_a_db + 0.15);
    }
}
