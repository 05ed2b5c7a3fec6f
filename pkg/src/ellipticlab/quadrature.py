"""Adaptive Simpson quadrature for boundary-collar integrals.

Integrands here are products of PLE functions; they are handled through
their logarithm so that factors like ``exp(beta theta L^tau)`` and
``exp(-beta theta L^tau)`` cancel before exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericError

ATOL = 1e-12
RTOL = 1e-10
MAX_DEPTH = 60
MAX_ACTIVE = 1 << 18


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     rtol: float = RTOL, atol: float = ATOL,
                     max_depth: int = MAX_DEPTH, noise: float = 0.0) -> QuadResult:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    All intervals of one refinement level are evaluated in a single call of
    ``f``.  An interval is accepted when the Richardson-corrected difference
    between one and two Simpson panels is below its share of
    ``max(atol, rtol * |I|)``, or when it is below ``noise`` times the
    panel's own magnitude (the rounding level of the integrand values).
    """
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    n0 = 16
    x = np.linspace(a, b, 2 * n0 + 1)
    fx = np.asarray(f(x), dtype=float)
    evals = x.size
    lo, hi = x[0:-1:2], x[2::2]
    flo, fmid, fhi = fx[0:-1:2], fx[1::2], fx[2::2]
    whole = (hi - lo) / 6.0 * (flo + 4 * fmid + fhi)
    estimate = float(np.sum(whole))
    total = 0.0
    err_total = 0.0
    width = b - a
    depth = 0
    while lo.size:
        if not np.all(np.isfinite(whole)):
            raise NumericError("non-finite integrand value during adaptive Simpson")
        mid = 0.5 * (lo + hi)
        q1, q3 = 0.5 * (lo + mid), 0.5 * (mid + hi)
        fq = np.asarray(f(np.concatenate([q1, q3])), dtype=float)
        evals += fq.size
        fq1, fq3 = fq[: lo.size], fq[lo.size:]
        left = (mid - lo) / 6.0 * (flo + 4 * fq1 + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * fq3 + fhi)
        halves = left + right
        diff = halves - whole
        tol = max(atol, rtol * abs(estimate))
        share = tol * (hi - lo) / width
        done = np.abs(diff) <= 15.0 * share
        if noise > 0:
            done |= np.abs(diff) <= noise * (np.abs(left) + np.abs(right))
        depth += 1
        if depth >= max_depth:
            done[:] = True
        total += float(np.sum((halves + diff / 15.0)[done]))
        err_total += float(np.sum(np.abs(diff[done]))) / 15.0
        keep = ~done
        estimate = total + float(np.sum(halves[keep]))
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        flo, fmid_new, fhi = (np.concatenate([flo[keep], fmid[keep]]),
                              np.concatenate([fq1[keep], fq3[keep]]),
                              np.concatenate([fmid[keep], fhi[keep]]))
        fmid = fmid_new
        whole = np.concatenate([left[keep], right[keep]])
        if depth >= max_depth and lo.size:
            break
        if lo.size > MAX_ACTIVE:
            raise NumericError(
                f"adaptive Simpson on [{a!r}, {b!r}] did not settle: {lo.size} active intervals "
                f"at depth {depth}")
    if not math.isfinite(total):
        raise NumericError("adaptive Simpson produced a non-finite result")
    return QuadResult(sign * total, err_total, evals)


def integrate_exp(log_f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                  rtol: float = RTOL, atol_rel: float = 1e-14) -> float:
    """Integral of ``exp(log_f)`` over a finite interval.

    The integrand is rescaled by its largest sampled value; ``inf`` is
    returned when that value overflows.  Panels are accepted at
    the rounding floor of ``exp(log_f)`` when ``|log_f|`` is large.
    """
    probe = np.linspace(a, b, 129)
    lp = np.asarray(log_f(probe), dtype=float)
    if np.any(np.isnan(lp)):
        raise NumericError("NaN in log-integrand")
    shift = float(np.max(lp))
    if shift == -math.inf:
        return 0.0
    if shift == math.inf:
        return math.inf
    finite = lp[np.isfinite(lp)]
    noise = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(finite))))
    res = adaptive_simpson(lambda x: np.exp(log_f(x) - shift), a, b, rtol=rtol,
                           atol=atol_rel * (b - a), noise=noise)
    if shift >= 709.7:
        return math.inf if res.value > 0 else 0.0
    return res.value * math.exp(shift)


def integrate_exp_tail(log_f: Callable[[np.ndarray], np.ndarray], t0: float,
                       rtol: float = RTOL, drop: float = 60.0, max_span: float = 1e5) -> float:
    """Integral of ``exp(log_f)`` over ``[t0, inf)`` for an eventually decaying integrand.

    The range is extended in doubling steps until the log-integrand has
    fallen ``drop`` units below its running maximum and is decreasing.
    """
    step = 1.0
    edges = [t0]
    peak = float(np.max(log_f(np.array([t0]))))
    while True:
        t_next = edges[-1] + step
        seg = np.linspace(edges[-1], t_next, 33)
        ls = np.asarray(log_f(seg), dtype=float)
        if np.any(ls == math.inf):
            return math.inf
        peak = max(peak, float(np.max(ls)))
        edges.append(t_next)
        decreasing = ls[-1] <= ls[-2]
        if decreasing and ls[-1] < peak - drop:
            break
        if t_next - t0 > max_span:
            raise NumericError(
                f"integrand does not decay on [{t0}, {t_next}] (log value {ls[-1]:.3g})")
        step *= 2.0
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_exp(log_f, lo, hi, rtol=rtol)
        if total == math.inf:
            return math.inf
    return total
