#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uma/special_math.hpp"
#include "uma/traffic_model.hpp"

using namespace uma;

TEST_CASE("message generation law") {
    SystemConfig cfg;
    cfg.K = 50;
    cfg.rho_s = 0.0;
    cfg.rho_d_max = 1.0;
    Rng rng(3);

    SUBCASE("degenerate probabilities") {
        auto users = sample_user_messages(cfg, 1.0, 16, true, rng);
        int alarms = 0, standards = 0;
        for (const auto& u : users) {
            if (u.alarm) ++alarms;
            if (u.standard) ++standards;
        }
        CHECK(alarms == cfg.K);
        CHECK(standards == 0);
        // all users carry the same alarm message
        for (const auto& u : users) CHECK(*u.alarm == *users[0].alarm);
    }

    SUBCASE("no alarm event means zero alarm users regardless of rho_d") {
        auto users = sample_user_messages(cfg, 0.9, 16, false, rng);
        for (const auto& u : users) CHECK(!u.alarm);
    }

    SUBCASE("standard-user count concentrates at K rho_s") {
        SystemConfig big;
        big.K = 100000;
        big.rho_s = 0.01;
        double sum = 0.0;
        const int draws = 1000;
        for (int d = 0; d < draws; ++d) {
            auto users = sample_user_messages(big, 0.0, 1 << 16, false, rng);
            int c = 0;
            for (const auto& u : users)
                if (u.standard) ++c;
            sum += c;
        }
        double mean = sum / draws;
        double sigma = std::sqrt(100000 * 0.01 * 0.99 / draws);
        CHECK(std::fabs(mean - 1000.0) < 3.0 * sigma);
    }

    SUBCASE("fixed seed is bit-reproducible") {
        Rng a(17, 4), b(17, 4);
        auto u1 = sample_user_messages(cfg, 0.3, 64, true, a);
        auto u2 = sample_user_messages(cfg, 0.3, 64, true, b);
        for (long long i = 0; i < cfg.K; ++i) {
            CHECK(u1[i].alarm == u2[i].alarm);
            CHECK(u1[i].standard == u2[i].standard);
        }
    }
}

TEST_CASE("energy per bit accounting") {
    CHECK(ebno_alarm_homa(100, 0.006, 0.5, 200, 8) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(ebno_alarm_homa(100, 0.012, 0.5, 200, 8) ==
          doctest::Approx(10.0 + 10.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(ebno_std_homa(200, 1.0, 100.0) == doctest::Approx(0.0));
    CHECK(ebno_std_homa(400, 0.5, 100.0) == doctest::Approx(0.0));
    // depends on the product n_s P_s only
    CHECK(ebno_std_homa(100, 2.0, 100.0) == doctest::Approx(ebno_std_homa(400, 0.5, 100.0)));
    // nonorthogonal formulas coincide at blocklength n
    CHECK(ebno_hnoma(30000, 0.01, 1.0, 100.0, 1) ==
          doctest::Approx(ebno_std_homa(30000, 0.01, 100.0)));
    // scaling K and 1/rho_d jointly leaves the alarm value unchanged
    CHECK(ebno_hnoma(30000, 1e-6, 0.5, 3.0, 2000) ==
          doctest::Approx(ebno_hnoma(30000, 1e-6, 0.25, 3.0, 4000)).epsilon(1e-12));

    SUBCASE("strictly increasing in the power argument") {
        Rng rng(9);
        for (int t = 0; t < 30; ++t) {
            double p = std::exp(rng.uniform(-12.0, 2.0));
            double factor = 1.0 + rng.uniform();
            CHECK(ebno_alarm_homa(151, p * factor, 0.7, 1000, 8) >
                  ebno_alarm_homa(151, p, 0.7, 1000, 8));
            CHECK(ebno_std_homa(3000, p * factor, 100.0) > ebno_std_homa(3000, p, 100.0));
        }
    }
}

TEST_CASE("rho_d floor") {
    CHECK(rho_d_floor(1, 1e-5) == doctest::Approx(0.99999).epsilon(1e-12));
    CHECK(rho_d_floor(30000, 1e-5) == doctest::Approx(3.8376e-4).epsilon(1e-4));
    CHECK(rho_d_floor(100, 0.999999) < 1e-7);  // eps -> 1 sends the floor to 0

    SUBCASE("monotonicity") {
        CHECK(rho_d_floor(2000, 1e-5) < rho_d_floor(1000, 1e-5));
        CHECK(rho_d_floor(1000, 1e-6) > rho_d_floor(1000, 1e-5));
    }
}

TEST_CASE("log-domain message-set helpers") {
    // exact at desk scale
    CHECK(log_ms_minus(8.0, 3.0) == doctest::Approx(std::log(253.0)).epsilon(1e-12));
    // the correction underflows at b_s = 100
    CHECK(log_ms_minus(100.0, 300.0) == doctest::Approx(100.0 * std::log(2.0)));
}

TEST_CASE("binomial window leak") {
    // complement of a window mass, K = 10, p = 0.5
    double total = 0.0;
    for (int k = 0; k <= 10; ++k)
        if (k < 3 || k > 7) total += binomial_pmf(k, 10, 0.5);
    CHECK(binomial_window_leak(10, 0.5, 3, 7) == doctest::Approx(total).epsilon(1e-12));
    CHECK(binomial_window_leak(10, 0.5, 0, 10) == doctest::Approx(0.0));
}
