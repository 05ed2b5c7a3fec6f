"""Cutoff functions and the integral estimates of the nonexistence argument.

For ``delta`` in (0, 1/e) put ``t = -1/log(delta)`` and

    phi   = (d/delta)^(C1 t)            for d <= delta, 1 otherwise,
    eta_n = 0, 2n d/delta - 1, 1        below, on, above [delta/2n, delta/n],
    phi_n = eta_n phi.

The proof controls ``int V^(-beta+eps) |grad phi_n|^b dmu`` by the sum of

    I1 = int_{S^delta} V^e |grad phi|^b dmu
    I2 = int_{S^(delta/n) \\ S^(delta/2n)} V^e phi^b |grad eta_n|^b dmu

with ``(e, b) = (-beta + t/g, p(sigma - t)/g)`` in parts (a), (c) and
``(e, b) = (-beta - Lambda, alpha + p Lambda)`` in part (b), where
``g = sigma - p + 1``.  Both integrals are evaluated here by quadrature and
compared with their claimed decay in t and n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericError, ParameterError
from .fitting import loglog_slope, midpoint_slope
from .growth import collar_integral
from .problem import Exponents, ProblemSpec, exponents

PARTS = ("a", "b", "c")


def lambda_shift(p: float, sigma: float, t: float) -> float:
    """Shift ``Lambda = (p-1) sigma t / (g (sigma - (t+1)(p-1)))`` of part (b).

    The sandwich ``(p-1) sigma t/g^2 < Lambda < 2 (p-1) sigma t/g^2`` and the
    identities ``beta + Lambda = (t+1)(p-1)/(sigma-(t+1)(p-1))`` and
    ``alpha + p Lambda = p sigma/(sigma-(t+1)(p-1))`` are checked on return.
    """
    ex = exponents(p, sigma)
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t!r}")
    denom = sigma - (t + 1.0) * (p - 1.0)
    if not denom > 0:
        raise ParameterError(f"sigma - (t+1)(p-1) = {denom!r} <= 0; t={t!r} is too large")
    g = ex.gap
    lam = (p - 1.0) * sigma * t / (g * denom)
    lo, hi = (p - 1.0) * sigma * t / g ** 2, 2.0 * (p - 1.0) * sigma * t / g ** 2
    if not lo < lam < hi:
        raise ParameterError(
            f"t={t!r} too large for the sandwich {lo!r} < Lambda={lam!r} < {hi!r}")
    for got, want in ((ex.beta + lam, (t + 1.0) * (p - 1.0) / denom),
                      (ex.alpha + p * lam, p * sigma / denom)):
        if abs(got - want) > 1e-12 * abs(want):
            raise NumericError(f"Lambda identity violated: {got!r} != {want!r}")
    return lam


def min_C1(p: float, sigma: float, C0: float, part: str) -> float:
    """Smallest admissible cutoff rate C1 for the given part."""
    g = sigma - p + 1.0
    c1 = max(4.0 * (C0 - p + 1.0) / (p * sigma), 1.0)
    if part in ("b", "c"):
        c1 = max(c1, 2.0 * (p + C0) / g)
    return c1


@dataclass(frozen=True)
class CutoffConfig:
    delta: float
    C1: float
    n: int
    p: float
    sigma: float
    C0: float
    part: str = "a"
    s: Optional[float] = None

    def __post_init__(self):
        if self.part not in PARTS:
            raise ParameterError(f"part must be one of {PARTS}, got {self.part!r}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        exponents(self.p, self.sigma)
        need = min_C1(self.p, self.sigma, self.C0, self.part)
        if self.C1 < need * (1 - 1e-12):
            raise ParameterError(f"C1={self.C1!r} below the admissible minimum {need!r}")
        s_min = self.s_min
        if self.s is None:
            object.__setattr__(self, "s", s_min)
        elif self.s < s_min:
            raise ParameterError(f"test power s={self.s!r} below {s_min!r}")

    @classmethod
    def minimal(cls, p: float, sigma: float, C0: float, delta: float, n: int = 1000,
                part: str = "a") -> "CutoffConfig":
        return cls(delta, min_C1(p, sigma, C0, part), n, p, sigma, C0, part)

    @property
    def exps(self) -> Exponents:
        return exponents(self.p, self.sigma)

    @property
    def t(self) -> float:
        return -1.0 / math.log(self.delta)

    @property
    def s_min(self) -> float:
        base = self.p * self.sigma / (self.sigma - self.p + 1.0)
        return 2.0 * base if self.part == "b" else base

    def t_threshold_chain(self) -> float:
        """Largest t with ``t(C0 - p sigma C1 + p C1 t - p)/g <= -t/g``."""
        return (self.p * self.sigma * self.C1 + self.p - 1.0 - self.C0) / (self.p * self.C1)

    def n_exponent_chain(self) -> float:
        """Exponent of n in the chain bound for I2, parts (a) and (c)."""
        t, g = self.t, self.sigma - self.p + 1.0
        return t * (self.C0 - self.p * self.sigma * self.C1 + self.p * self.C1 * t - self.p) / g

    def to_dict(self) -> dict:
        return {"delta": self.delta, "t": self.t, "C1": self.C1, "n": self.n, "p": self.p,
                "sigma": self.sigma, "C0": self.C0, "part": self.part, "s": self.s}


def cutoff_eval(cfg: CutoffConfig, d):
    """``(phi, eta_n, phi_n, gradient bound of phi)`` at distance d from the boundary."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0) or np.any(d_arr >= 1):
        raise DomainError("cutoffs are evaluated for d in (0, 1)")
    delta, n, a = cfg.delta, cfg.n, cfg.C1 * cfg.t
    inside = d_arr <= delta
    phi = np.where(inside, (np.minimum(d_arr, delta) / delta) ** a, 1.0)
    eta = np.clip(2.0 * n * d_arr / delta - 1.0, 0.0, 1.0)
    grad = np.where(inside, a * delta ** (-a) * d_arr ** (a - 1.0), 0.0)
    out = (phi, eta, eta * phi, grad)
    if np.ndim(d) == 0:
        return tuple(float(x) for x in out)
    return out


def grad_eta(cfg: CutoffConfig, d):
    """|grad eta_n|: 2n/delta on the ramp, 0 elsewhere."""
    d_arr = np.asarray(d, dtype=float)
    lo, hi = cfg.delta / (2 * cfg.n), cfg.delta / cfg.n
    return np.where((d_arr >= lo) & (d_arr <= hi), 2.0 * cfg.n / cfg.delta, 0.0)


def cancellation_factor(C1: float, q: float, delta: float) -> tuple:
    """``(delta^(-C1 t q), e^(C1 q))`` with ``t = -1/log delta``; equal identically."""
    t = -1.0 / math.log(delta)
    return delta ** (-C1 * t * q), math.exp(C1 * q)


def integrand_exponents(cfg: CutoffConfig) -> Dict[str, float]:
    """Power e of V and power b of the gradients for the part of cfg."""
    ex, t = cfg.exps, cfg.t
    g = ex.gap
    if cfg.part == "b":
        lam = lambda_shift(cfg.p, cfg.sigma, t)
        return {"e": -ex.beta - lam, "b": ex.alpha + cfg.p * lam, "Lambda": lam}
    return {"e": -ex.beta + t / g, "b": cfg.p * (cfg.sigma - t) / g, "Lambda": 0.0}


@dataclass
class EstimateReport:
    part: str
    config: CutoffConfig
    k: float
    I1: float
    I2: float
    I1_bound: float
    I2_bound: float
    n_exponent: float
    tau: Optional[float] = None

    @property
    def ratios(self):
        return self.I1 / self.I1_bound, self.I2 / self.I2_bound

    @property
    def claimed_bounds(self):
        return self.I1_bound, self.I2_bound

    def to_dict(self) -> dict:
        r1, r2 = self.ratios
        return {"part": self.part, "config": self.config.to_dict(), "k": self.k, "tau": self.tau,
                "I1": self.I1, "I2": self.I2, "I1_bound": self.I1_bound,
                "I2_bound": self.I2_bound, "I1_ratio": r1, "I2_ratio": r2,
                "I2_n_exponent_chain": self.n_exponent}


def proof_integrals(spec: ProblemSpec, cfg: CutoffConfig, k: Optional[float] = None,
                    tau: Optional[float] = None) -> EstimateReport:
    """Evaluate I1 and I2 for one cutoff configuration.

    ``k`` is the log power of the volume-growth bound in use (beta in part
    (b)); ``tau`` is needed for the part (c) bound on I1.  The claimed bounds
    are reported without their unknown constants.
    """
    if (spec.p, spec.sigma) != (cfg.p, cfg.sigma):
        raise ParameterError("cutoff configuration and problem disagree on (p, sigma)")
    part, t, n, delta = cfg.part, cfg.t, cfg.n, cfg.delta
    ex = spec.exps
    g = ex.gap
    pw = integrand_exponents(cfg)
    e, b, lam = pw["e"], pw["b"], pw["Lambda"]
    a = cfg.C1 * t
    log_grad_scale = math.log(a) - a * math.log(delta)

    def log_I1(d):
        return e * spec.V.log_eval(d) + b * (log_grad_scale + (a - 1.0) * np.log(d))

    def log_I2(d):
        return e * spec.V.log_eval(d) + b * (a * (np.log(d) - math.log(delta))
                                             + math.log(2.0 * n / delta))
    try:
        I1 = collar_integral(spec, log_I1, 0.0, delta)
        I2 = collar_integral(spec, log_I2, delta / (2 * n), delta / n)
    except NumericError as exc:
        raise NumericError(f"quadrature failed for part {part}, delta={delta!r}, n={n}: {exc}")

    L_n = abs(math.log(delta / n))
    if part == "a":
        if k is None:
            raise ParameterError("part (a) needs the log power k")
        I1_bound = t ** (b - k - 1.0)
        I2_bound = n ** (-t / g) * L_n ** k
        n_exp = cfg.n_exponent_chain()
    elif part == "c":
        if k is None or tau is None:
            raise ParameterError("part (c) needs k and tau")
        I1_bound = t ** (b - (k + 1.0) / tau)
        I2_bound = n ** (-t / g) * L_n ** k
        n_exp = cfg.n_exponent_chain()
    else:
        k = ex.beta
        n_exp = -(ex.alpha + lam * cfg.p) * cfg.C1 * t + lam * (cfg.p + cfg.C0)
        I1_bound = t ** (ex.alpha + lam * cfg.p - ex.beta - 1.0)
        I2_bound = n ** n_exp * L_n ** ex.beta
    return EstimateReport(part, cfg, float(k), I1, I2, I1_bound, I2_bound, n_exp, tau)


@dataclass
class SweepReport:
    """Decay of I2 in n or of I1 in t, compared with a claimed exponent."""

    name: str
    xs: List[float]
    values: List[float]
    slope: float
    claimed_slope: float
    tolerance: float
    monotone: bool
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.claimed_slope) / abs(self.claimed_slope)

    @property
    def passed(self) -> bool:
        return self.monotone and self.relative_error <= self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "x": self.xs, "values": self.values, "slope": self.slope,
                "claimed_slope": self.claimed_slope, "relative_error": self.relative_error,
                "tolerance": self.tolerance, "monotone": self.monotone,
                "verdict": "PASS" if self.passed else "FAIL", **self.extra}


def i2_sweep(spec: ProblemSpec, C0: float, k: float, delta: float, ns: Sequence[int],
             C1: Optional[float] = None, part: str = "a", tolerance: float = 0.10) -> SweepReport:
    """I2 over n at fixed delta; log-log slope against ``-t/g`` (part (b): ``-C_hat t``).

    The slope predicted by the exact chain exponent (before it is bounded by
    ``-t/g``) is reported as ``chain_slope``.
    """
    ns = sorted(int(n) for n in ns)
    values, chain = [], None
    for n in ns:
        cfg = (CutoffConfig(delta, C1, n, spec.p, spec.sigma, C0, part) if C1 is not None
               else CutoffConfig.minimal(spec.p, spec.sigma, C0, delta, n, part))
        rep = proof_integrals(spec, cfg, k=k, tau=2.0 if part == "c" else None)
        values.append(rep.I2)
        chain = rep.n_exponent
    fit = loglog_slope(ns, values)
    t, g = -1.0 / math.log(delta), spec.exps.gap
    claimed = chain if part == "b" else -t / g
    monotone = all(b < a for a, b in zip(values, values[1:]))
    return SweepReport("I2(n)", [float(n) for n in ns], values, fit["slope"], claimed,
                       tolerance, monotone, {"chain_slope": chain, "slope_se": fit.se("slope"),
                                             "C1": cfg.C1, "delta": delta, "t": t})


def i1_sweep(spec: ProblemSpec, C0: float, k: float, ts: Sequence[float],
             C1: Optional[float] = None, part: str = "a", tau: Optional[float] = None,
             n: int = 1000, tolerance: float = 0.10) -> SweepReport:
    """I1 over t (``delta = e^(-1/t)``); local log-log slope at the middle t."""
    ts = sorted(float(t) for t in ts)
    if len(ts) != 3:
        raise ParameterError("i1_sweep needs exactly three t values")
    values = []
    for t in ts:
        delta = math.exp(-1.0 / t)
        cfg = (CutoffConfig(delta, C1, n, spec.p, spec.sigma, C0, part) if C1 is not None
               else CutoffConfig.minimal(spec.p, spec.sigma, C0, delta, n, part))
        values.append(proof_integrals(spec, cfg, k=k, tau=tau).I1)
    slope = midpoint_slope(ts, values)
    t_mid, g = ts[1], spec.exps.gap
    ex = spec.exps
    if part == "a":
        claimed = spec.p * (spec.sigma - t_mid) / g - k - 1.0
    elif part == "c":
        claimed = spec.p * (spec.sigma - t_mid) / g - (k + 1.0) / tau
    else:
        lam = lambda_shift(spec.p, spec.sigma, t_mid)
        claimed = ex.alpha + lam * spec.p - ex.beta - 1.0
    monotone = all(b > a for a, b in zip(values, values[1:]))
    return SweepReport("I1(t)", ts, values, slope, claimed, tolerance, monotone,
                       {"t_mid": t_mid})


# -- sign conditions of the proof ----------------------------------------------------

@dataclass
class LedgerRow:
    t: float
    value: float
    threshold: float
    ok: bool


@dataclass
class ExponentLedger:
    part: str
    verdict: str                      # PASS, FAIL or "hypothesis violated"
    expression: str
    t_threshold: Optional[float]
    rows: List[LedgerRow]
    notes: Dict[str, float] = field(default_factory=dict)
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {"part": self.part, "verdict": self.verdict, "expression": self.expression,
                "t_threshold": self.t_threshold, "reason": self.reason,
                "rows": [{"t": r.t, "value": r.value, "threshold": r.threshold, "ok": r.ok}
                         for r in self.rows], **self.notes}

    def __post_init__(self):
        self.rows = [LedgerRow(float(r.t), float(r.value), float(r.threshold), bool(r.ok))
                     for r in self.rows]


def part_b_exponent_sum(p: float, sigma: float, t: float) -> float:
    """Total power of t in the part (b) estimate after letting n -> infinity."""
    ex = exponents(p, sigma)
    g, beta = ex.gap, ex.beta
    lam = lambda_shift(p, sigma, t)
    return (-(p - 1) / p - (p - 1) ** 2 * sigma / (p * g) + (p - 1) * (sigma - t) / g
            - (beta + 1) * (p - 1) / p + 1 - (beta + 1) / (ex.alpha + lam * p))


def _t_grid(t_max: float, count: int = 20) -> np.ndarray:
    t_max = min(t_max, 0.9)
    return np.geomspace(1e-4 * t_max, 0.9 * t_max, count)


def exponent_ledger(p: float, sigma: float, k: float = 0.0, tau: Optional[float] = None,
                    part: str = "a", ts: Optional[Sequence[float]] = None,
                    eps_star: Optional[float] = None) -> ExponentLedger:
    """Check the proof's sign condition for one part on a grid of small t.

    (a): ``beta - k - p t/g >= delta_* = (beta - k)/2``;
    (c): ``sigma/g - (k+1)/tau - p t/g >= (sigma/g - (k+1)/tau)/2``;
    (b): the exponent sum equals ``-(p-1)^2 t/(p g)`` exactly.
    Each threshold on t is solved for; the default grid stays below it.
    """
    ex = exponents(p, sigma)
    g, beta = ex.gap, ex.beta
    if part == "a":
        expr = "beta - k - p t/g"
        if not 0 <= k < beta:
            return ExponentLedger(part, "hypothesis violated", expr, None, [],
                                  reason=f"need 0 <= k < beta = {beta!r}, got k = {k!r}")
        floor = (beta - k) / 2.0
        t_max = (beta - k) * g / (2.0 * p)
        grid = _t_grid(t_max) if ts is None else np.asarray(ts, dtype=float)
        rows = [LedgerRow(float(t), beta - k - p * t / g, floor,
                          beta - k - p * t / g >= floor - 1e-15) for t in grid]
        notes = {"delta_star": floor}
    elif part == "c":
        expr = "sigma/g - (k+1)/tau - p t/g"
        if tau is None:
            raise ParameterError("part (c) needs tau")
        tau_min = max(g * (k + 1.0) / sigma, 1.0)
        if k < 0 or not tau > tau_min:
            return ExponentLedger(part, "hypothesis violated", expr, None, [],
                                  reason=f"need k >= 0 and tau > {tau_min!r}, got k={k!r}, tau={tau!r}")
        base = sigma / g - (k + 1.0) / tau
        floor = base / 2.0
        t_max = base * g / (2.0 * p)
        grid = _t_grid(t_max) if ts is None else np.asarray(ts, dtype=float)
        rows = [LedgerRow(float(t), base - p * t / g, floor, base - p * t / g >= floor - 1e-15)
                for t in grid]
        notes = {"delta_star": floor}
    elif part == "b":
        expr = "exponent sum + (p-1)^2 t/(p g)"
        # Sandwich upper bound needs sigma - (t+1)(p-1) > g/2.
        t_max = (sigma - (p - 1) - g / 2.0) / (p - 1) if p > 1 else 1.0
        grid = _t_grid(t_max) if ts is None else np.asarray(ts, dtype=float)
        rows = []
        lam_max = 0.0
        for t in grid:
            lam = lambda_shift(p, sigma, float(t))
            lam_max = max(lam_max, lam)
            value = part_b_exponent_sum(p, sigma, float(t))
            target = -(p - 1) ** 2 * t / (p * g)
            rows.append(LedgerRow(float(t), value, target,
                                  abs(value - target) <= 1e-12 * max(1.0, abs(target))))
        notes = {"Lambda_max": lam_max}
        if eps_star is not None:
            notes["eps_star"] = eps_star
            if not lam_max < eps_star:
                return ExponentLedger(part, "FAIL", expr, float(t_max), rows, notes,
                                      reason=f"Lambda reaches {lam_max!r} >= eps* = {eps_star!r}")
    else:
        raise ParameterError(f"part must be one of {PARTS}, got {part!r}")
    ok = all(r.ok for r in rows)
    return ExponentLedger(part, "PASS" if ok else "FAIL", expr, float(t_max), rows, notes,
                          "" if ok else "sign condition violated on the t grid")
