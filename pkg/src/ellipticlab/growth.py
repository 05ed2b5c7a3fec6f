"""Weighted volume-growth conditions near the boundary of the unit ball.

For the collar annulus ``A(delta) = {delta/2 <= d < delta}`` the three
conditions bound ``I(delta, eps) = int_A V^(-beta +- eps) dmu`` by

    HP1:  C delta^(alpha - C0 eps) L^k              (k < beta)
    HP2:  C delta^(alpha - C0 eps) L^beta           (both signs of eps)
    HP3:  C delta^(alpha - C0 eps) L^k exp(-eps theta L^tau)

with ``L = |log delta|`` and C independent of delta and eps.  A finite grid
can only corroborate or falsify such a statement, so the verdict is read off
asymptotic fits of the log-ratio ``log I - log bound`` in ``L``: the bound
holds when the fitted ratio cannot grow as ``L -> oo``, neither for a fixed
eps nor in the limit ``eps -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedFormError
from .fitting import LinearFit, linear_fit
from .problem import PleFunction, PlePiece, ProblemSpec
from .quadrature import integrate_exp, integrate_exp_tail

DELTA_EXPONENTS = tuple(range(4, 21))
EPS_HALVINGS = tuple(range(1, 9))
C0_GRID = tuple(2.0 ** (j / 2.0) for j in range(-4, 13))
FIT_TOLERANCE = 0.05
SLOPE_TOLERANCE = 0.01


class Variant(str, Enum):
    HP1 = "hp1"
    HP2 = "hp2"
    HP3 = "hp3"


# -- integrals over the boundary collar --------------------------------------------

def _log_measure(spec: ProblemSpec, d: np.ndarray) -> np.ndarray:
    """log of the radial density ``a(d) S(1 - d)`` of dmu."""
    M = spec.manifold
    r = 1.0 - d
    with np.errstate(divide="ignore"):
        psi = M.psi.evaluate(np.maximum(r, 0.0))[0]
        return spec.a.log_eval(d) + math.log(M.omega_m) + (M.m - 1) * np.log(psi)


def collar_integral(spec: ProblemSpec, log_factor: Callable[[np.ndarray], np.ndarray],
                    d_lo: float, d_hi: float, rtol: float = 1e-10) -> float:
    """``int_{d_lo <= d <= d_hi} exp(log_factor(d)) dmu`` in the variable ``t = -log d``.

    ``d_lo = 0`` integrates the whole collar ``S^{d_hi}`` (tail in t).
    """
    if not 0 <= d_lo < d_hi <= 1:
        raise DomainError(f"collar bounds must satisfy 0 <= d_lo < d_hi <= 1, got {d_lo}, {d_hi}")

    def log_integrand(t):
        d = np.exp(-t)
        return log_factor(d) + _log_measure(spec, d) - t

    t_lo = -math.log(d_hi)
    if d_lo == 0:
        return integrate_exp_tail(log_integrand, t_lo, rtol=rtol)
    return integrate_exp(log_integrand, t_lo, -math.log(d_lo), rtol=rtol)


def annulus_integral(spec: ProblemSpec, exponent: float, delta: float,
                     rtol: float = 1e-10) -> float:
    """``int_{S^delta \\ S^{delta/2}} V^exponent dmu``; ``inf`` when it overflows."""
    if not 0 < delta <= 1:
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
    V = spec.V
    return collar_integral(spec, lambda d: exponent * V.log_eval(d), 0.5 * delta, delta, rtol)


# -- grid checks of HP1-HP3 -------------------------------------------------------

@dataclass
class HpParams:
    k: Optional[float] = None
    C0: Optional[float] = None
    theta: float = 1.0
    tau: float = 2.0
    delta_exponents: Sequence[int] = DELTA_EXPONENTS
    eps_halvings: Sequence[int] = EPS_HALVINGS
    C0_grid: Sequence[float] = C0_GRID
    fit_tolerance: float = FIT_TOLERANCE
    slope_tolerance: float = SLOPE_TOLERANCE


@dataclass
class GridCell:
    delta: float
    eps: float
    sign: int
    integral: float
    bound: float
    ratio: float
    model_ratio: float = math.nan

    @property
    def residual(self) -> float:
        return self.ratio / self.model_ratio

    def to_dict(self) -> dict:
        branch = "-beta+eps" if self.sign > 0 else "-beta-eps"
        return {"delta": self.delta, "eps": self.eps, "branch": branch,
                "integral": self.integral, "bound": self.bound, "ratio": self.ratio,
                "model_ratio": self.model_ratio, "residual": self.residual}


@dataclass
class BranchFit:
    """Asymptotic description of one exponent branch (``-beta + sign*eps``)."""

    sign: int
    slopes: Dict[float, float]           # coefficient of L in the log-ratio, per eps
    log_powers: Dict[float, float]       # coefficient of log L in the log-ratio, per eps
    slope_limit: float
    log_power_limit: float
    max_abs_residual: float
    unbounded: bool
    reason: str
    witness: Optional[Tuple[float, float]]


@dataclass
class HpReport:
    variant: Variant
    verdict: str
    C0: float
    k: float
    theta: Optional[float]
    tau: Optional[float]
    fitted_alpha_exponent: float
    fitted_alpha_exponent_se: float
    fitted_log_exponent: float
    fitted_log_exponent_se: float
    fitted_C: float
    fitted_C0: float
    deltas: List[float]
    epsilons: List[float]
    cells: List[GridCell]
    branches: List[BranchFit]
    witness: Optional[Tuple[float, float]]
    reason: str
    c_independence_suspect: bool
    per_eps_constants: Dict[float, float]
    tried: List[Tuple[float, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    @property
    def residual_table(self) -> List[GridCell]:
        return self.cells

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value, "verdict": self.verdict, "reason": self.reason,
            "C0": self.C0, "k": self.k, "theta": self.theta, "tau": self.tau,
            "fitted_alpha_exponent": self.fitted_alpha_exponent,
            "fitted_alpha_exponent_se": self.fitted_alpha_exponent_se,
            "fitted_log_exponent": self.fitted_log_exponent,
            "fitted_log_exponent_se": self.fitted_log_exponent_se,
            "fitted_C": self.fitted_C, "fitted_C0": self.fitted_C0,
            "witness": None if self.witness is None else {"delta": self.witness[0],
                                                          "eps": self.witness[1]},
            "c_independence_suspect": self.c_independence_suspect,
            "per_eps_constants": [{"eps": e, "C": c} for e, c in
                                  sorted(self.per_eps_constants.items())],
            "grid": {"delta": self.deltas, "eps": self.epsilons},
            "branches": [{"sign": b.sign, "slope_limit": b.slope_limit,
                          "log_power_limit": b.log_power_limit,
                          "max_abs_log_residual": b.max_abs_residual,
                          "unbounded": b.unbounded, "reason": b.reason} for b in self.branches],
            "C0_tried": [{"C0": c, "verdict": v} for c, v in self.tried],
        }


def admissible_eps_max(alpha: float, beta: float, C0: float) -> float:
    """Upper end of the eps range, ``min((alpha - 1)/C0, beta)``."""
    if C0 < 0:
        raise ParameterError(f"C0 must be nonnegative, got {C0!r}")
    eps_max = beta if C0 == 0 else min((alpha - 1.0) / C0, beta)
    if not eps_max > 1e-12:
        raise ParameterError(f"empty admissible eps range for C0={C0!r}")
    return eps_max


def _regressors(L: np.ndarray) -> Dict[str, np.ndarray]:
    return {"const": np.ones_like(L), "L": L, "logL": np.log(L), "invL": 1.0 / L,
            "invL2": 1.0 / L ** 2, "delta": np.exp(-L)}


def _limit(eps: np.ndarray, values: np.ndarray, stderr: Optional[np.ndarray] = None):
    """Linear extrapolation to eps = 0 from the three smallest eps."""
    order = np.argsort(eps)[:3]
    fit = linear_fit(values[order], {"const": np.ones(order.size), "eps": eps[order]})
    se = fit.se("const")
    if stderr is not None:
        se = math.hypot(se, float(np.max(stderr[order])))
    return fit["const"], fit["eps"], se


class _IntegralCache:
    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.values: Dict[Tuple[float, float], float] = {}

    def __call__(self, exponent: float, delta: float) -> float:
        key = (exponent, delta)
        if key not in self.values:
            self.values[key] = annulus_integral(self.spec, exponent, delta)
        return self.values[key]


def _validate(spec: ProblemSpec, variant: Variant, params: HpParams) -> Tuple[float, float, float]:
    ex = spec.exps
    k = params.k
    if variant is Variant.HP1:
        k = max(ex.beta - 0.01, 0.0) if k is None else k
        if not 0 <= k < ex.beta:
            raise ParameterError(f"HP1 needs k in [0, beta={ex.beta!r}), got k={k!r}")
    elif variant is Variant.HP2:
        k = ex.beta
    else:
        k = ex.beta if k is None else k
        if k < 0:
            raise ParameterError(f"HP3 needs k >= 0, got {k!r}")
        if not params.theta > 0:
            raise ParameterError(f"HP3 needs theta > 0, got {params.theta!r}")
        tau_min = max((ex.sigma - ex.p + 1.0) / ex.sigma * (k + 1.0), 1.0)
        if not params.tau > tau_min:
            raise ParameterError(f"HP3 needs tau > {tau_min!r}, got tau={params.tau!r}")
    if params.C0 is not None:
        if variant is not Variant.HP3 and not params.C0 > 0:
            raise ParameterError(f"{variant.value} needs C0 > 0, got {params.C0!r}")
        admissible_eps_max(ex.alpha, ex.beta, params.C0)
    return k, params.theta, params.tau


def _log_bound(variant: Variant, alpha: float, C0: float, k: float, theta: float, tau: float,
               L: np.ndarray, eps: float) -> np.ndarray:
    out = -(alpha - C0 * eps) * L + k * np.log(L)
    if variant is Variant.HP3:
        out = out - eps * theta * L ** tau
    return out


def _branch_fit(sign: int, eps_list: Sequence[float], L: np.ndarray,
                log_ratio: Dict[float, np.ndarray], params: HpParams) -> Tuple[BranchFit, Dict]:
    cols = _regressors(L)
    slopes, logs, fits = {}, {}, {}
    worst = 0.0
    for eps in eps_list:
        fit = linear_fit(log_ratio[eps], cols)
        fits[eps] = fit
        slopes[eps] = fit["L"]
        logs[eps] = fit["logL"]
        worst = max(worst, float(np.max(np.abs(fit.residuals))))
    eps_arr = np.array(list(eps_list))
    a0, _, _ = _limit(eps_arr, np.array([slopes[e] for e in eps_list]))
    b0, _, _ = _limit(eps_arr, np.array([logs[e] for e in eps_list]))
    tol_a, tol_b = params.slope_tolerance, params.fit_tolerance
    unbounded, reason, witness_eps = False, "bounded", None
    for eps in sorted(eps_list, reverse=True):
        if slopes[eps] > tol_a:
            unbounded, witness_eps = True, eps
            reason = f"power growth at eps={eps:.6g}: ratio ~ delta^-{slopes[eps]:.4g}"
            break
        if abs(slopes[eps]) <= tol_a and logs[eps] > tol_b:
            unbounded, witness_eps = True, eps
            reason = f"log growth at eps={eps:.6g}: ratio ~ L^{logs[eps]:.4g}"
            break
    if not unbounded:
        if a0 > tol_a:
            unbounded, witness_eps = True, min(eps_list)
            reason = f"power growth as eps -> 0: ratio ~ delta^-{a0:.4g}"
        elif a0 >= -tol_a and b0 > tol_b:
            unbounded, witness_eps = True, min(eps_list)
            reason = (f"constant not uniform in eps: ratio ~ L^{b0:.4g} as eps -> 0")
    witness = None
    if witness_eps is not None:
        j = int(np.argmax(log_ratio[witness_eps]))
        witness = (float(np.exp(-L[j])), float(witness_eps))
    bf = BranchFit(sign, slopes, logs, float(a0), float(b0), worst, unbounded, reason, witness)
    return bf, fits


def _check_fixed_C0(spec: ProblemSpec, variant: Variant, params: HpParams, C0: float,
                    k: float, theta: float, tau: float, cache: _IntegralCache) -> HpReport:
    ex = spec.exps
    eps_max = admissible_eps_max(ex.alpha, ex.beta, C0)
    deltas = [2.0 ** -j for j in params.delta_exponents]
    eps_list = [eps_max / 2.0 ** i for i in params.eps_halvings]
    L = -np.log(np.array(deltas))
    signs = (1, -1) if variant is Variant.HP2 else (1,)

    cells: List[GridCell] = []
    branches: List[BranchFit] = []
    log_I_plus: Dict[float, np.ndarray] = {}
    for sign in signs:
        log_ratio = {}
        for eps in eps_list:
            exponent = -ex.beta + sign * eps
            integrals = np.array([cache(exponent, d) for d in deltas])
            log_b = _log_bound(variant, ex.alpha, C0, k, theta, tau, L, eps)
            with np.errstate(divide="ignore"):
                log_I = np.log(integrals)
            if sign == 1:
                log_I_plus[eps] = log_I
            log_ratio[eps] = log_I - log_b
            for d, I, lb in zip(deltas, integrals, log_b):
                bound = math.exp(lb)
                cells.append(GridCell(d, eps, sign, float(I), bound, float(I) / bound))
        if any(not np.all(np.isfinite(v)) for v in log_ratio.values()):
            bf = BranchFit(sign, {}, {}, math.inf, math.inf, math.inf, True,
                           "integral diverges on the grid", None)
            bad = next(c for c in cells if c.sign == sign and not math.isfinite(c.ratio))
            bf.witness = (bad.delta, bad.eps)
            branches.append(bf)
            continue
        bf, fits = _branch_fit(sign, eps_list, L, log_ratio, params)
        branches.append(bf)
        cols = _regressors(L)
        for eps in eps_list:
            model = np.exp(fits[eps].predict(cols))
            for j, d in enumerate(deltas):
                cell = next(c for c in cells if c.sign == sign and c.eps == eps and c.delta == d)
                cell.model_ratio = float(model[j])

    # Exponents of the measured integral itself, extrapolated to eps -> 0.
    eps_arr = np.array(eps_list)
    cols = _regressors(L)
    if all(np.all(np.isfinite(v)) for v in log_I_plus.values()):
        A, Ase, K, Kse = [], [], [], []
        for eps in eps_list:
            fit = linear_fit(log_I_plus[eps], cols)
            A.append(-fit["L"]); Ase.append(fit.se("L"))
            K.append(fit["logL"]); Kse.append(fit.se("logL"))
        A, K = np.array(A), np.array(K)
        alpha_fit, dA, alpha_se = _limit(eps_arr, A, np.array(Ase))
        log_fit, _, log_se = _limit(eps_arr, K, np.array(Kse))
        fitted_C0 = float(-dA)
    else:
        alpha_fit = log_fit = alpha_se = log_se = fitted_C0 = math.nan

    finite = [c for c in cells if math.isfinite(c.ratio)]
    fitted_C = max((c.ratio for c in finite), default=math.inf)
    per_eps = {}
    for eps in eps_list:
        per_eps[eps] = max(c.ratio for c in cells if c.eps == eps)
    ordered = [per_eps[e] for e in sorted(eps_list, reverse=True)]
    suspect = all(b > a for a, b in zip(ordered, ordered[1:]))

    failing = [b for b in branches if b.unbounded]
    max_resid = max((c.residual for c in cells if math.isfinite(c.residual)), default=math.inf)
    if failing:
        verdict, reason, witness = "FAIL", failing[0].reason, failing[0].witness
    elif max_resid > 1.0 + params.fit_tolerance:
        verdict, reason = "FAIL", (f"asymptotic model misfits the grid by factor {max_resid:.4g}")
        worst = max(cells, key=lambda c: c.residual)
        witness = (worst.delta, worst.eps)
    else:
        verdict, reason, witness = "PASS", "ratio bounded uniformly on the grid", None
    cells.sort(key=lambda c: (c.delta, c.eps, -c.sign))
    return HpReport(variant, verdict, C0, k,
                    theta if variant is Variant.HP3 else None,
                    tau if variant is Variant.HP3 else None,
                    float(alpha_fit), float(alpha_se), float(log_fit), float(log_se),
                    float(fitted_C), fitted_C0, deltas, eps_list, cells, branches,
                    witness, reason, suspect, per_eps)


def check_hp(spec: ProblemSpec, variant, params: Optional[HpParams] = None) -> HpReport:
    """Grid test of one volume-growth condition.

    With ``params.C0`` unset, C0 runs through ``params.C0_grid`` (plus 0 for
    HP3) and the smallest passing value is reported; on failure the report
    for the grid value nearest the fitted C0 is returned.
    """
    variant = Variant(variant.lower() if isinstance(variant, str) else variant)
    params = params or HpParams()
    k, theta, tau = _validate(spec, variant, params)
    cache = _IntegralCache(spec)
    if params.C0 is not None:
        return _check_fixed_C0(spec, variant, params, params.C0, k, theta, tau, cache)
    grid = sorted(set(params.C0_grid))
    if variant is Variant.HP3:
        grid = [0.0] + [c for c in grid if c > 0]
    tried, reports = [], []
    for C0 in grid:
        try:
            report = _check_fixed_C0(spec, variant, params, C0, k, theta, tau, cache)
        except ParameterError:
            continue
        tried.append((C0, report.verdict))
        reports.append(report)
        if report.passed:
            report.tried = tried
            return report
    fitted = [r.fitted_C0 for r in reports if math.isfinite(r.fitted_C0)]
    target = float(np.median(fitted)) if fitted else grid[-1]
    report = min(reports, key=lambda r: (abs(r.C0 - target), r.C0))
    report.tried = tried
    return report


def cells_to_rows(report: HpReport) -> List[dict]:
    """Rows of ``hp_table.csv``, sorted by (delta, eps)."""
    return [c.to_dict() for c in sorted(report.cells, key=lambda c: (c.delta, c.eps, -c.sign))]


# -- exact sufficient conditions for PLE data --------------------------------------

@dataclass(frozen=True)
class Asymptotic:
    """Leading behaviour ``d^q L^s exp(-sum theta_tau L^tau)`` as d -> 0."""

    q: float = 0.0
    s: float = 0.0
    exp_terms: Tuple[Tuple[float, float], ...] = ()  # (tau, theta), tau > 1

    @classmethod
    def of(cls, f) -> "Asymptotic":
        if isinstance(f, PleFunction):
            piece = f.leading
        elif isinstance(f, PlePiece):
            piece = f
        else:
            raise UnsupportedFormError(
                f"exact asymptotic comparison needs PLE data, got {type(f).__name__}")
        q = piece.q
        terms = ()
        if piece.theta != 0:
            if piece.tau == 1:
                q += piece.theta  # exp(-theta L) = d^theta
            else:
                terms = ((piece.tau, piece.theta),)
        return cls(q, piece.s, terms)

    @classmethod
    def power(cls, q=0.0, s=0.0, exp_terms=()) -> "Asymptotic":
        return cls(q, s, tuple(exp_terms))

    def _merged(self) -> Dict[float, float]:
        out: Dict[float, float] = {}
        for tau, theta in self.exp_terms:
            out[tau] = out.get(tau, 0.0) + theta
        return {t: th for t, th in out.items() if th != 0}

    def __mul__(self, other: "Asymptotic") -> "Asymptotic":
        terms = dict(self._merged())
        for tau, theta in other._merged().items():
            terms[tau] = terms.get(tau, 0.0) + theta
        return Asymptotic(self.q + other.q, self.s + other.s,
                          tuple(sorted((t, th) for t, th in terms.items() if th != 0)))

    def __pow__(self, e: float) -> "Asymptotic":
        return Asymptotic(self.q * e, self.s * e,
                          tuple((t, th * e) for t, th in self._merged().items()))

    def __truediv__(self, other: "Asymptotic") -> "Asymptotic":
        return self * other ** -1.0

    def growth_terms(self) -> List[float]:
        """Coefficients of log f in decreasing order of growth: L^tau (tau>1), L, log L."""
        merged = self._merged()
        return [-merged[t] for t in sorted(merged, reverse=True)] + [-self.q, self.s]

    def bounded(self) -> bool:
        """Whether f stays bounded as d -> 0 (first nonzero growth coefficient < 0)."""
        for c in self.growth_terms():
            if abs(c) > 1e-12:
                return c < 0
        return True


@dataclass
class SufficientResult:
    item: str
    holds: bool
    condition: str
    C: Optional[float] = None
    C0: Optional[float] = None
    delta0: Optional[float] = None
    extra: Dict[str, float] = field(default_factory=dict)
    reason: str = ""

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {"item": self.item, "holds": self.holds, "condition": self.condition,
                "C": self.C, "C0": self.C0, "delta0": self.delta0, "reason": self.reason,
                **self.extra}


def _extreme_ratio(f: PleFunction, g_log: Callable[[np.ndarray], np.ndarray], delta0: float,
                   kind: str) -> float:
    """sup (kind='sup') or inf (kind='inf') of f/g over (0, delta0] on a log grid."""
    t = np.linspace(-math.log(delta0), 700.0, 20001)
    d = np.exp(-t)
    lr = f.log_eval(d) - g_log(d)
    val = np.max(lr) if kind == "sup" else np.min(lr)
    with np.errstate(over="ignore"):
        return float(np.exp(val))


def _min_k(ratio: Asymptotic) -> Optional[float]:
    """Smallest k >= 0 with ``ratio <= C L^k``; None when no k works."""
    merged = ratio._merged()
    lead = [(-merged[t]) for t in sorted(merged, reverse=True) if abs(merged[t]) > 1e-12]
    if lead:
        return 0.0 if lead[0] < 0 else None
    if -ratio.q > 1e-12:
        return None
    if -ratio.q < -1e-12:
        return 0.0
    return max(0.0, ratio.s)


def _min_C0_upper(V: Asymptotic) -> Optional[float]:
    """Smallest C0 >= 0 with ``V <= C d^-C0``; None if V grows like an exponential."""
    merged = V._merged()
    lead = [(-merged[t]) for t in sorted(merged, reverse=True) if abs(merged[t]) > 1e-12]
    if lead:
        return 0.0 if lead[0] < 0 else None
    c0 = float(max(0.0, -V.q))
    if V.s > 0 and c0 == -V.q:
        c0 += 1e-6
    return c0


def sufficient_check(spec: ProblemSpec, item: str, k: Optional[float] = None,
                     theta: float = 1.0, eps1: Optional[float] = None) -> SufficientResult:
    """Decide one of the pointwise sufficient conditions (items i to v) exactly.

    Decisions compare leading exponents of the PLE data (exponential rate,
    then power, then log power).  Witness constants C are measured on
    ``(0, delta0]`` with ``delta0`` the leading piece's cut.
    """
    item = item.lower().strip()
    ex = spec.exps
    sigma, beta, alpha = ex.sigma, ex.beta, ex.alpha
    Va, aa = Asymptotic.of(spec.V), Asymptotic.of(spec.a)
    delta0 = min(spec.V.leading.d_cut, spec.a.leading.d_cut)
    if delta0 >= 1:
        delta0 = 0.5
    one = Asymptotic()
    a_bounded = (aa / one).bounded()
    # Annulus integral of V^-beta: int over [delta/2, delta] of V^-beta a dd ~ delta * V^-beta a.
    annulus = Va ** (-beta) * aa * Asymptotic.power(q=1.0)

    if item == "i":
        C0 = _min_C0_upper(Va)
        kk = _min_k(annulus / Asymptotic.power(q=alpha))
        if C0 is None or C0 == 0:
            return SufficientResult("i", False, "power upper bound", reason="no C0 > 0 with V <= C d^-C0")
        if kk is None or kk >= beta:
            return SufficientResult("i", False, "collar growth",
                                    reason="collar integral of V^-beta exceeds delta^alpha L^k, k<beta")
        kk = kk if kk > 0 else beta / 2.0
        C = _extreme_ratio(spec.V, lambda d: -C0 * np.log(d), delta0, "sup")
        return SufficientResult("i", True, "power upper bound + collar growth -> HP1", C, C0, delta0, {"k": kk})

    if item == "ii":
        if not a_bounded:
            return SufficientResult("ii", False, "two-sided log bound", reason="weight a is unbounded")
        target_q = -(sigma + 1.0)
        ratio = Va / Asymptotic.power(q=target_q)
        # V >= C d^-(sigma+1) L^(-k/beta)  <=>  d^-(sigma+1) L^(-k/beta) / V bounded
        kk = None
        if (Asymptotic.power(q=target_q) / Va).bounded():
            kk = 0.0
        else:
            inv = one / ratio
            if not inv._merged() and abs(inv.q) < 1e-12:
                kk = max(0.0, -beta * ratio.s)
        if kk is None or kk >= beta:
            return SufficientResult("ii", False, "two-sided log bound",
                                    reason="V is not bounded below by d^-(sigma+1) L^(-k/beta), k<beta")
        if k is not None:
            if not kk <= k < beta:
                return SufficientResult("ii", False, "two-sided log bound",
                                        reason=f"requested k={k} outside [{kk}, beta)")
            kk = k
        C_low = _extreme_ratio(spec.V, lambda d: target_q * np.log(d) - kk / beta * np.log(-np.log(d)),
                               delta0, "inf")
        C_a = _extreme_ratio(spec.a, lambda d: np.zeros_like(d), delta0, "sup")
        return SufficientResult("ii", True, "two-sided log bound -> HP1", min(C_low, 1.0 / C_a if C_a else 1.0),
                                sigma + 1.0, delta0, {"k": kk, "V_lower_C": C_low, "a_upper_C": C_a})

    if item == "iii":
        if not a_bounded:
            return SufficientResult("iii", False, "log lower bound", reason="weight a is unbounded")
        target = Asymptotic.power(q=-(sigma + 1.0), s=-1.0)
        if not (target / Va).bounded():
            return SufficientResult("iii", False, "log lower bound",
                                    reason="V is not bounded below by d^-(sigma+1) L^-1")
        C0 = _min_C0_upper(Va)
        if C0 is None or C0 == 0:
            return SufficientResult("iii", False, "power upper bound", reason="no C0 > 0 with V <= C d^-C0")
        C_low = _extreme_ratio(spec.V, lambda d: -(sigma + 1) * np.log(d) - np.log(-np.log(d)),
                               delta0, "inf")
        C_up = _extreme_ratio(spec.V, lambda d: -C0 * np.log(d), delta0, "sup")
        return SufficientResult("iii", True, "log lower bound + power upper bound -> HP2",
                                max(C_up, 1.0 / C_low), C0, delta0,
                                {"V_lower_C": C_low, "V_upper_C": C_up})

    if item == "iv":
        merged = Va._merged()
        taus = sorted(merged, reverse=True)
        if not taus or merged[taus[0]] <= 0:
            return SufficientResult("iv", False, "exponential upper bound",
                                    reason="V has no decaying exp(-theta L^tau) factor with tau > 1")
        tau_v, theta_v = taus[0], merged[taus[0]]
        rest = Va * Asymptotic(0.0, 0.0, ((tau_v, -theta_v),))
        C0 = _min_C0_upper(rest)
        if C0 is None:
            return SufficientResult("iv", False, "exponential upper bound",
                                    reason="V/exp(-theta L^tau) is not polynomially bounded")
        kk = _min_k(annulus / Asymptotic.power(q=alpha))
        if kk is None:
            return SufficientResult("iv", False, "collar growth",
                                    reason="collar integral of V^-beta exceeds delta^alpha L^k for every k")
        if k is not None:
            if k < kk:
                return SufficientResult("iv", False, "collar growth", reason=f"requested k={k} < needed {kk}")
            kk = k
        tau_min = max((sigma - ex.p + 1.0) / sigma * (kk + 1.0), 1.0)
        if not tau_v > tau_min:
            return SufficientResult("iv", False, "tau",
                                    reason=f"tau={tau_v} does not exceed {tau_min}")
        C = _extreme_ratio(spec.V, lambda d: -C0 * np.log(d) - theta_v * (-np.log(d)) ** tau_v,
                           delta0, "sup")
        return SufficientResult("iv", True, "exponential upper bound + collar growth -> HP3", C, C0, delta0,
                                {"k": kk, "theta": theta_v, "tau": tau_v})

    if item == "v":
        if not a_bounded:
            return SufficientResult("v", False, "v", reason="weight a is unbounded")
        merged = Va._merged()
        taus = sorted(merged, reverse=True)
        if not taus or merged[taus[0]] >= 0:
            return SufficientResult("v", False, "v",
                                    reason="V has no growing exp(+c L^tau) factor with tau > 1")
        tau_v, growth = taus[0], -merged[taus[0]]
        kk = 0.0 if k is None else k
        tau_min = max((sigma - ex.p + 1.0) / sigma * (kk + 1.0), 1.0)
        if not tau_v > tau_min:
            return SufficientResult("v", False, "tau", reason=f"tau={tau_v} does not exceed {tau_min}")
        # (beta/(beta - eps1) - 1) theta <= growth  <=>  eps1 <= beta growth / (theta + growth)
        eps1_max = min(beta * growth / (theta + growth), beta)
        e1 = eps1_max / 2.0 if eps1 is None else eps1
        if not 0 < e1 <= eps1_max:
            return SufficientResult("v", False, "v", reason=f"eps1={e1} outside (0, {eps1_max}]")
        return SufficientResult("v", True, "v -> HP3", None, None, delta0,
                                {"k": kk, "theta": theta, "tau": tau_v, "eps1": e1})

    raise ParameterError(f"unknown sufficient-condition item {item!r}; expected i..v")


# -- layered (dyadic) integral bound ------------------------------------------------

@dataclass
class LayeredReport:
    verdict: str
    C: float
    deltas: List[float]
    lhs: List[float]
    rhs: List[float]
    ratios: List[float]
    trend: float
    witness: Optional[float]

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def layered_bound_check(spec: ProblemSpec, f: Callable[[np.ndarray], np.ndarray],
                        exponent: float, deltas: Iterable[float], C0: float, k: float,
                        hp3: Optional[Tuple[float, float]] = None,
                        trend_tolerance: float = SLOPE_TOLERANCE) -> LayeredReport:
    """Compare ``int_{S^delta} f(d) V^exponent dmu`` with the one-dimensional bound.

    The right side is ``int_0^{delta/2} f(r) r^(alpha - C0 eps - 1) |log r|^k dr``
    (times ``exp(-eps theta |log r|^tau)`` when ``hp3 = (theta, tau)``), with
    ``eps = exponent + beta`` for the + branch.  ``f`` must be nonnegative and
    nonincreasing; PASS means the ratio of the two sides does not grow as
    delta decreases.
    """
    ex = spec.exps
    eps = abs(exponent + ex.beta)
    deltas = sorted(deltas, reverse=True)
    probe = np.geomspace(1e-12, max(deltas), 400)
    fv = np.asarray(f(probe), dtype=float)
    if np.any(fv < 0) or np.any(np.diff(fv) > 1e-12 * np.maximum(np.abs(fv[:-1]), 1e-300)):
        raise DomainError("layered bound needs f nonnegative and nonincreasing")

    def log_f(d):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(f(d), dtype=float))

    def vanishes_below(x):
        return not np.any(np.asarray(f(np.geomspace(1e-300, x, 200))) > 0)

    lhs, rhs = [], []
    power = ex.alpha - C0 * eps - 1.0
    for delta in deltas:
        lhs.append(0.0 if vanishes_below(delta) else collar_integral(
            spec, lambda d: log_f(d) + exponent * spec.V.log_eval(d), 0.0, delta))

        def log_rhs(t):
            r = np.exp(-t)
            out = log_f(r) + power * np.log(r) + k * np.log(t) - t
            if hp3 is not None:
                out = out - eps * hp3[0] * t ** hp3[1]
            return out
        rhs.append(0.0 if vanishes_below(delta / 2) else
                   integrate_exp_tail(log_rhs, -math.log(delta / 2.0)))
    lhs_a, rhs_a = np.array(lhs), np.array(rhs)
    if np.all(lhs_a == 0):
        return LayeredReport("PASS", 0.0, list(deltas), lhs, rhs, [0.0] * len(deltas), 0.0, None)
    if not np.all(np.isfinite(lhs_a)):
        j = int(np.argmax(~np.isfinite(lhs_a)))
        return LayeredReport("FAIL", math.inf, list(deltas), lhs, rhs,
                             list(lhs_a / rhs_a), math.inf, deltas[j])
    with np.errstate(divide="ignore"):
        ratios = lhs_a / rhs_a
    if not np.all(np.isfinite(ratios)):
        j = int(np.argmax(~np.isfinite(ratios)))
        return LayeredReport("FAIL", math.inf, list(deltas), lhs, rhs, list(ratios),
                             math.inf, deltas[j])
    # Growth model for log(ratio): power of delta first, then power of L.
    L = -np.log(np.array(deltas))
    trend = 0.0
    unbounded = False
    if len(deltas) >= 5:
        fit = linear_fit(np.log(ratios), {"const": np.ones_like(L), "L": L,
                                          "logL": np.log(L), "invL": 1.0 / L})
        trend = fit["L"]
        unbounded = trend > trend_tolerance or (
            abs(trend) <= trend_tolerance and fit["logL"] > FIT_TOLERANCE)
    elif len(deltas) >= 2:
        trend = float(np.polyfit(L, np.log(ratios), 1)[0])
        unbounded = trend > trend_tolerance
    C = float(np.max(ratios))
    if unbounded:
        return LayeredReport("FAIL", C, list(deltas), lhs, rhs, list(ratios), float(trend),
                             deltas[int(np.argmax(ratios))])
    return LayeredReport("PASS", C, list(deltas), lhs, rhs, list(ratios), float(trend), None)
