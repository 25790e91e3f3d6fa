"""Smoke tests for the python module: kernel values and one tiny search."""

import math
import sys

sys.path.insert(0, sys.argv[1] if len(sys.argv) > 1 else ".")

import pyuma  # noqa: E402

failures = 0


def check(ok, label):
    global failures
    print(("ok   " if ok else "FAIL ") + label)
    if not ok:
        failures += 1


check(abs(pyuma.log_gamma(5.0) - math.log(24.0)) < 1e-12, "log_gamma(5)")
check(abs(pyuma.upper_incomplete_gamma_reg(1.0, math.log(2.0)) - 0.5) < 1e-12, "Q(1, ln2)")
check(abs(pyuma.binomial_pmf(2, 4, 0.5) - 0.375) < 1e-14, "binomial pmf")
check(abs(pyuma.chi_square_tail(2, 2 * math.log(2.0)) - 0.5) < 1e-12, "chi-square tail")
check(abs(pyuma.rho_d_floor(1, 1e-5) - 0.99999) < 1e-12, "rho_d floor")
check(abs(pyuma.ebno_alarm_homa(100, 0.006, 0.5, 200, 8) - 10.0) < 1e-12, "alarm ebno")

pp = pyuma.select_pprime(3000, 0.05, 1e-8)
check(0 < pp < 0.05, "select_pprime brackets")
kl, ku = pyuma.select_k_limits(1000, 0.01, 1e-10, 0)
check(0 <= kl < ku <= 1000, "select_k_limits window")

cfg = pyuma.SystemConfig(K=40, n=400, M_a=4, b_s=12.0, rho_s=0.2)
mc = pyuma.McSettings()
mc.samples = 20000
mc.seed = 3
star = pyuma.ebno_s_star(40, cfg, mc)
check(math.isfinite(star.ebno_db), "ebno_s_star finite")
ns = pyuma.find_ns_min(0.2, 40, cfg, mc)
check(0 < ns.n_s_min <= 400, "find_ns_min in range")

mean, lo, hi = pyuma.ka_estimation_error_prob(
    n=30000, K_s=100, psi_db=20.0, P_s=0.0086051, K_a=12, trials=50000
)
check(lo <= mean <= hi, "count-estimation probe interval")
check(0.2 < mean < 0.36, "count-estimation probe magnitude")

print("smoke test:", "FAIL" if failures else "PASS")
sys.exit(1 if failures else 0)
