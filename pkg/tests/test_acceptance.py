"""Exit criteria, one test per criterion; each prints a PASS/FAIL line."""

import inspect
import math
import time

import numpy as np
import pytest

from ellipticlab import barrier as B
from ellipticlab import estimates as E
from ellipticlab import growth as G
from ellipticlab import problem as P
from ellipticlab import spectral as S

import test_properties
from conftest import J01, PI2, constant_spec

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    """Collects (name, ok, detail) checks and prints one line for the criterion."""
    checks = []

    def record(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    def finish(number, title, elapsed, limit):
        record(f"runtime < {limit:g} s", elapsed < limit, f"{elapsed:.1f} s")
        ok = all(c[1] for c in checks)
        failed = "; ".join(f"{n}: {d}" for n, good, d in checks if not good)
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title}"
                  + (f" [{failed}]" if failed else ""))
        assert ok, failed

    record.finish = finish
    return record


def test_criterion_1_eigen_oracles(verdict):
    start = time.perf_counter()
    for m, exact in ((3, PI2), (2, J01 ** 2)):
        t0 = time.perf_counter()
        lam = S.first_eigenpair(constant_spec(m), 1.0).lam
        fd = S.fd_eigen_oracle(constant_spec(m), 1.0, 2000).lam
        dt = time.perf_counter() - t0
        verdict(f"m={m} shooting", abs(lam / exact - 1) <= 1e-6, f"rel err {abs(lam / exact - 1):.2e}")
        verdict(f"m={m} fd", abs(fd / exact - 1) <= 1e-3, f"rel err {abs(fd / exact - 1):.2e}")
        verdict(f"m={m} runtime < 5 s", dt < 5, f"{dt:.2f} s")
    verdict.finish(1, "eigenvalue oracles", time.perf_counter() - start, 10)


def test_criterion_2_monotonicity(verdict, cex):
    start = time.perf_counter()
    scan = S.eigen_scan(cex, [0.5, 0.7, 0.9, 0.99])
    lams = scan.lambdas
    verdict("strictly decreasing in rho", all(b < a for a, b in zip(lams, lams[1:])), str(lams))
    base = S.first_eigenpair(cex, 0.9).lam
    for c in (0.5, 2.0, 10.0):
        lam = S.first_eigenpair(cex.with_V(cex.V.scaled(c)), 0.9).lam
        err = abs(lam * c / base - 1)
        verdict(f"c={c:g} scaling", err <= 1e-8, f"rel err {err:.2e}")
    verdict.finish(2, "domain and potential monotonicity", time.perf_counter() - start, 600)


def test_criterion_3_bottom_of_spectrum(verdict, cex):
    start = time.perf_counter()
    lam = S.eigen_scan(cex, [0.9, 0.999]).lambdas
    verdict("lambda(0.999) < 0.1 lambda(0.9)", lam[1] < 0.1 * lam[0], f"{lam[1]:.3e} vs {lam[0]:.3e}")
    certs = [S.spectral_test_function(cex, a) for a in (1.0, 0.1, 0.01)]
    verdict("certificates", all(c.passed for c in certs), "; ".join(c.reason for c in certs))
    # ratio = K alpha f with f in [1/2, 2] for a common K, i.e. max/min of ratio/alpha <= 4.
    per_alpha = [c.ratio / c.alpha for c in certs]
    spread = max(per_alpha) / min(per_alpha)
    K = math.sqrt(max(per_alpha) * min(per_alpha))
    verdict("ratio proportional to alpha within factor 2", spread <= 4.0,
            "ratio/alpha = " + ", ".join(f"{x:.3f}" for x in per_alpha) + f", K {K:.3f}")
    verdict.finish(3, "bottom of the spectrum is zero", time.perf_counter() - start, 60)


def test_criterion_4_hp_verdicts(verdict, exp_weight, cex, log_bound):
    start = time.perf_counter()
    verdict("exp_weight HP3 PASS", G.check_hp(exp_weight, "hp3", G.HpParams(k=1.0)).verdict == "PASS")
    verdict("exp_weight HP1 FAIL", G.check_hp(exp_weight, "hp1").verdict == "FAIL")
    for variant, k in (("hp1", 0.49), ("hp2", None), ("hp3", 0.5)):
        rep = G.check_hp(cex, variant, G.HpParams(k=k))
        verdict(f"cex {variant} FAIL", rep.verdict == "FAIL", rep.verdict)
        verdict(f"cex {variant} log exponent", abs(rep.fitted_log_exponent - 0.75) <= 0.05,
                f"{rep.fitted_log_exponent:.4f}")
    verdict("log_bound HP1 PASS", G.check_hp(log_bound, "hp1", G.HpParams(k=0.25)).verdict == "PASS")
    verdict.finish(4, "HP verdicts", time.perf_counter() - start, 30)


def test_criterion_5_proof_estimates(verdict, log_bound):
    start = time.perf_counter()
    i2 = E.i2_sweep(log_bound, 4.0, 0.25, math.exp(-10.0), [100, 1000, 10000])
    verdict("I2 decreasing in n", i2.monotone)
    verdict("I2 slope within 10% of -t/g", i2.relative_error <= 0.10,
            f"slope {i2.slope:.4f} vs {i2.claimed_slope:.4f}")
    i1 = E.i1_sweep(log_bound, 4.0, 0.25, [0.05, 0.1, 0.2])
    verdict("I1 increasing in t", i1.monotone)
    verdict("I1 slope within 10%", i1.relative_error <= 0.10,
            f"slope {i1.slope:.4f} vs {i1.claimed_slope:.4f}")
    worst = 0.0
    for delta in (0.3, 1e-2, 1e-10, 1e-100):
        for C1 in (1.0, 2.0, 6.0):
            q = 2 * (3 - (-1 / math.log(delta))) / 2
            lhs, rhs = E.cancellation_factor(C1, q, delta)
            worst = max(worst, abs(lhs / rhs - 1))
    verdict("cancellation to 1e-12", worst <= 1e-12, f"{worst:.1e}")
    verdict.finish(5, "proof-estimate decay", time.perf_counter() - start, 600)


def test_criterion_6_counterexample(verdict, cex):
    start = time.perf_counter()
    u, _ = B.build_supersolution(cex, lambda_bar=0.1)
    rep = B.verify_supersolution(cex, u)
    verdict("min u > 0", rep.min_u > 0, f"{rep.min_u:.3e}")
    verdict("C1 mismatch <= 1e-6", rep.c1_mismatch <= 1e-6, f"{rep.c1_mismatch:.2e}")
    verdict("pointwise residual at 1e4 points", rep.points == 10_000
            and rep.max_scaled_residual <= 1e-8, f"{rep.max_scaled_residual:.3e}")
    verdict("20 weak integrals <= 1e-8", len(rep.weak_values) == 20
            and max(rep.weak_values) <= 1e-8, f"max {max(rep.weak_values):.3e}")
    verdict("report", rep.passed, rep.reason)
    verdict.finish(6, "counterexample pipeline", time.perf_counter() - start, 120)


def test_criterion_7_formulation_equivalence(verdict, exp_weight):
    start = time.perf_counter()
    assert not exp_weight.a.is_constant
    u = lambda r: np.cos(r) + 0.5
    du = lambda r: -np.sin(r)
    pairs = [B.TestFunction(E.CutoffConfig.minimal(2.0, 3.0, 1.0, dl, n))
             for dl in (0.3, 0.1) for n in (1, 2, 4, 8, 16)]
    worst = 0.0
    for tf in pairs:
        eq19, gen = B.formulation_gap(exp_weight, u, du, tf)
        worst = max(worst, abs(eq19 - gen) / abs(gen))
    verdict("10 pairs within 1e-10", len(pairs) == 10 and worst <= 1e-10, f"{worst:.1e}")
    verdict.finish(7, "formulation equivalence", time.perf_counter() - start, 600)


def test_criterion_8_invariant_suites(verdict):
    start = time.perf_counter()
    props = [(name, fn) for name, fn in inspect.getmembers(test_properties, inspect.isfunction)
             if name.startswith("test_")]
    for name, fn in props:
        try:
            fn()
            verdict(name, True)
        except Exception as exc:  # report every property, then fail once
            verdict(name, False, f"{type(exc).__name__}: {str(exc)[:200]}")
    verdict.finish(8, f"{len(props)} randomised invariant suites", time.perf_counter() - start, 600)
