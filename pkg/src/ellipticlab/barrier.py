"""Positive supersolution for a potential violating the growth conditions.

For ``p = 2`` and ``a = 1`` a positive supersolution of
``Delta u + V u^sigma <= 0`` on the unit ball is glued from two pieces: the
logarithmic barrier ``kappa zeta(r) = kappa (1-r) |log(1-r)|^lambda`` near the
boundary and a multiple of the first Dirichlet eigenfunction ``w_rho`` of a
slightly smaller ball inside.  The matching radius ``xi`` minimises
``kappa zeta / w_rho``, which makes the glued function C^1.

The amplitude ``kappa`` multiplies the barrier.  Because ``sigma > 1``,
shrinking a supersolution keeps it a supersolution, so any ``kappa`` in
``(0, 1]`` is admissible; ``kappa < 1`` moves the sign change of the residual
to moderate distances from the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import estimates as E
from . import spectral as S
from .errors import ConstructionError, DomainError, ParameterError, UnsupportedFormError
from .problem import ProblemSpec

SAMPLE_POINTS = 10_000
DELTA_MAX = 0.25
DELTA_MIN = 1e-8
L_MAX = 700.0
DEFAULT_KAPPAS = tuple(2.0 ** -j for j in range(8))
RHO_EXPONENTS = tuple(range(2, 21))
GAUSS_NODES = 16
MATCH_TOL = 1e-6


def _check_setting(spec: ProblemSpec):
    if spec.p != 2.0:
        raise UnsupportedFormError("the barrier construction is implemented for p = 2")
    if not spec.a.is_constant:
        raise UnsupportedFormError("the barrier construction is implemented for constant a")


def _check_lambda(lambda_bar: float):
    if not lambda_bar > 0:
        raise ParameterError(f"barrier exponent must be positive, got {lambda_bar!r}")


# ---------------------------------------------------------------------------
# The barrier and its residual


def zeta_eval(lambda_bar: float, r):
    """``(zeta, zeta', zeta'')`` of ``zeta(r) = (1-r) |log(1-r)|^lambda``.

    The derivative sign claims hold for ``r > 1 - 1/e``, where ``|log(1-r)| > 1``.
    """
    _check_lambda(lambda_bar)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= 1):
        raise DomainError("zeta is evaluated for r in (0, 1)")
    d = 1.0 - r_arr
    L = -np.log(d)
    lam = lambda_bar
    z = d * L ** lam
    dz = -L ** lam + lam * L ** (lam - 1.0)
    d2z = lam / d * L ** (lam - 2.0) * ((lam - 1.0) - L)
    if np.ndim(r) == 0:
        return float(z), float(dz), float(d2z)
    return z, dz, d2z


def _bracket_from_L(spec: ProblemSpec, lambda_bar: float, L, kappa: float = 1.0,
                    potential: bool = True):
    """Braced factor of the residual, written in ``L = |log(1-r)|``.

    ``Delta(kappa zeta) + V (kappa zeta)^sigma = kappa L^(lambda-2)/(1-r) * bracket``.
    """
    L = np.asarray(L, dtype=float)
    lam, sigma = lambda_bar, spec.sigma
    d = np.exp(-L)
    H = spec.manifold.mean_curvature(-np.expm1(-L))
    hdl = H * d * L
    out = lam * (lam - 1.0) - lam * L + lam * hdl - hdl * L
    if potential:
        log_term = (spec.V.log_eval(d) + (sigma + 1.0) * np.log(d)
                    + (lam * (sigma - 1.0) + 2.0) * np.log(L) + (sigma - 1.0) * math.log(kappa))
        out = out + np.exp(log_term)
    return out


def zeta_bracket(spec: ProblemSpec, lambda_bar: float, r, kappa: float = 1.0,
                 potential: bool = True):
    """The braced factor of the residual expansion at radius r (its sign is the residual's)."""
    _check_lambda(lambda_bar)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= 1):
        raise DomainError("the barrier residual is evaluated for r in (0, 1)")
    out = _bracket_from_L(spec, lambda_bar, -np.log1p(-r_arr), kappa, potential)
    return float(out) if np.ndim(r) == 0 else out


def zeta_residual(spec: ProblemSpec, lambda_bar: float, r, kappa: float = 1.0,
                  potential: bool = True):
    """``Delta(kappa zeta) + V (kappa zeta)^sigma`` by the factored expansion.

    With ``potential=False`` the potential term is dropped and the value is
    ``Delta(kappa zeta)``.
    """
    _check_setting(spec)
    r_arr = np.asarray(r, dtype=float)
    bracket = zeta_bracket(spec, lambda_bar, r_arr, kappa, potential)
    L = -np.log1p(-r_arr)
    out = kappa * L ** (lambda_bar - 2.0) / (1.0 - r_arr) * bracket
    return float(out) if np.ndim(r) == 0 else out


def zeta_residual_direct(spec: ProblemSpec, lambda_bar: float, r, kappa: float = 1.0,
                         potential: bool = True):
    """Same residual from ``zeta'' + (m-1) psi'/psi zeta' + V zeta^sigma`` term by term."""
    r_arr = np.asarray(r, dtype=float)
    z, dz, d2z = zeta_eval(lambda_bar, r_arr)
    out = kappa * (d2z + spec.manifold.mean_curvature(r_arr) * dz)
    if potential:
        out = out + spec.V(1.0 - r_arr) * (kappa * z) ** spec.sigma
    return float(out) if np.ndim(r) == 0 else out


def eventually_negative(spec: ProblemSpec, lambda_bar: float) -> bool:
    """Whether the residual bracket is negative for all r close enough to 1.

    The bracket behaves like ``-lambda L + V d^(sigma+1) L^(lambda(sigma-1)+2)``
    up to terms that vanish; the potential term is compared by its leading PLE
    piece.
    """
    piece = spec.V.leading
    if piece.theta > 0:
        return True
    power = piece.q + spec.sigma + 1.0
    if power != 0:
        return power > 0
    return piece.s + lambda_bar * (spec.sigma - 1.0) + 2.0 < 1.0


def _sample_L(delta: float, n: int = SAMPLE_POINTS) -> np.ndarray:
    """Values of ``|log(1-r)|`` at n graded points of ``(1-delta, 1)``."""
    L0 = -math.log(delta)
    return L0 + np.geomspace(1e-9, L_MAX - L0, n)


@dataclass(frozen=True)
class DeltaScan:
    lambda_bar: float
    kappa: float
    delta: Optional[float]
    tried: Tuple[Tuple[float, float], ...]

    @property
    def r0(self) -> Optional[float]:
        return None if self.delta is None else 1.0 - self.delta

    def to_dict(self) -> dict:
        return {"lambda_bar": self.lambda_bar, "kappa": self.kappa, "delta": self.delta,
                "r0": self.r0, "tried": [list(t) for t in self.tried]}


def scan_delta(spec: ProblemSpec, lambda_bar: float, kappa: float = 1.0,
               delta_max: float = DELTA_MAX, delta_min: float = DELTA_MIN) -> DeltaScan:
    """Halve delta from ``delta_max`` until the residual and ``zeta'`` are negative on the layer.

    Each candidate records the largest bracket value found on its layer.
    """
    _check_setting(spec)
    _check_lambda(lambda_bar)
    if not 0 < kappa <= 1:
        raise ParameterError(f"barrier amplitude must lie in (0, 1], got {kappa!r}")
    tried = []
    if not eventually_negative(spec, lambda_bar):
        return DeltaScan(lambda_bar, kappa, None, ())
    delta = delta_max
    while delta >= delta_min:
        L = _sample_L(delta)
        worst = float(np.max(_bracket_from_L(spec, lambda_bar, L, kappa)))
        tried.append((delta, worst))
        # zeta' < 0 exactly when L > lambda.
        if worst < 0 and L[0] > lambda_bar:
            return DeltaScan(lambda_bar, kappa, delta, tuple(tried))
        delta /= 2.0
    return DeltaScan(lambda_bar, kappa, None, tuple(tried))


def find_delta_negative(spec: ProblemSpec, lambda_bar: float, kappa: float = 1.0,
                        delta_min: float = DELTA_MIN) -> Tuple[float, float]:
    """Largest dyadic delta <= 1/4 with a negative residual and ``zeta' < 0`` on ``(1-delta, 1)``."""
    scan = scan_delta(spec, lambda_bar, kappa, delta_min=delta_min)
    if scan.delta is None:
        worst = max((w for _, w in scan.tried), default=math.nan)
        raise ConstructionError(
            f"no delta >= {delta_min:g} makes the barrier residual negative "
            f"(lambda={lambda_bar!r}, kappa={kappa!r}, smallest bracket maximum {worst:.4g})",
            actionable="smaller barrier amplitude kappa")
    return scan.delta, 1.0 - scan.delta


# ---------------------------------------------------------------------------
# Gluing


@dataclass
class GluedSupersolution:
    spec: ProblemSpec
    lambda_bar: float
    kappa: float
    delta: float
    r0: float
    rho: float
    lam_rho: float
    theta: float
    xi: float
    gamma: float
    eig: S.EigenResult = field(repr=False)
    value_mismatch: float = 0.0
    slope_mismatch: float = 0.0
    scale: float = 1.0
    r: np.ndarray = field(default=None, repr=False)
    u: np.ndarray = field(default=None, repr=False)

    @property
    def amplitude(self) -> float:
        """Overall factor ``scale * gamma^(1/(sigma-1))``."""
        return self.scale * self.gamma ** (1.0 / (self.spec.sigma - 1.0))

    def scaled(self, c: float) -> "GluedSupersolution":
        out = replace(self, scale=self.scale * c)
        out.u = None if self.u is None else self.u * c
        return out

    def evaluate(self, r) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(u, u', Delta u)`` at radii in [0, 1); one-sided from the right at xi."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r_arr < 0) or np.any(r_arr >= 1):
            raise DomainError("the glued function is evaluated for r in [0, 1)")
        u = np.empty_like(r_arr)
        du = np.empty_like(r_arr)
        lap = np.empty_like(r_arr)
        inner = r_arr < self.xi
        if np.any(inner):
            w, dw = self.eig.evaluate(r_arr[inner])
            V = self.spec.V(1.0 - r_arr[inner])
            u[inner] = self.theta * w
            du[inner] = self.theta * dw
            # w'' + (m-1) psi'/psi w' = -lambda_rho V w along the eigenfunction.
            lap[inner] = -self.theta * self.lam_rho * V * w
        outer = ~inner
        if np.any(outer):
            ro = r_arr[outer]
            z, dz, d2z = zeta_eval(self.lambda_bar, ro)
            u[outer] = self.kappa * z
            du[outer] = self.kappa * dz
            lap[outer] = self.kappa * (d2z + self.spec.manifold.mean_curvature(ro) * dz)
        a = self.amplitude
        return a * u, a * du, a * lap

    def left_derivative_at_xi(self) -> float:
        return self.amplitude * self.theta * self.eig.evaluate(self.xi)[1]

    def to_dict(self) -> dict:
        return {"lambda_bar": self.lambda_bar, "kappa": self.kappa, "delta": self.delta,
                "r0": self.r0, "rho": self.rho, "lambda_rho": self.lam_rho,
                "theta": self.theta, "xi": self.xi, "gamma": self.gamma,
                "scale": self.scale, "value_mismatch": self.value_mismatch,
                "slope_mismatch": self.slope_mismatch}


def slope_condition(eig: S.EigenResult, lambda_bar: float, r0: float) -> Tuple[bool, float, float]:
    """``(holds, w'/w at r0, zeta'/zeta at r0)``."""
    w, dw = eig.evaluate(r0)
    z, dz, _ = zeta_eval(lambda_bar, r0)
    return dw / w > dz / z, dw / w, dz / z


def glue(spec: ProblemSpec, eig: S.EigenResult, r0: float, lambda_bar: float,
         kappa: float = 1.0, delta: Optional[float] = None,
         grid_points: int = SAMPLE_POINTS) -> GluedSupersolution:
    """Match ``theta w_rho`` to ``kappa zeta`` at the minimiser of their ratio on ``[r0, rho)``."""
    _check_setting(spec)
    rho = eig.rho
    if not rho > r0:
        raise ConstructionError(f"eigenball radius {rho!r} must exceed r0={r0!r}",
                                actionable="larger rho")
    ok, w_slope, z_slope = slope_condition(eig, lambda_bar, r0)
    if not ok:
        raise ConstructionError(
            f"slope condition fails at r0={r0!r}: w'/w={w_slope:.6g} <= zeta'/zeta={z_slope:.6g}",
            actionable="larger rho")
    grid = np.linspace(r0, rho, grid_points + 1)[:-1]
    w, dw = eig.evaluate(grid)
    z = zeta_eval(lambda_bar, grid)[0]
    with np.errstate(divide="ignore"):
        ratio = np.where(w > 0, z / np.where(w > 0, w, 1.0), np.inf)
    i = int(np.argmin(ratio))
    if i == 0:
        raise ConstructionError(
            f"infimum of zeta/w_rho attained at r0={r0!r}; the ratio should decrease there",
            actionable="tighter eigen solver tolerance")

    def first_order(x):
        wx, dwx = eig.evaluate(x)
        zx, dzx, _ = zeta_eval(lambda_bar, x)
        return dzx * wx - zx * dwx

    lo, hi = grid[i - 1], grid[min(i + 1, grid.size - 1)]
    if i + 1 >= grid.size or first_order(lo) * first_order(hi) > 0:
        raise ConstructionError("could not bracket the matching radius around the grid minimum",
                                actionable="more grid points")
    xi = optimize.brentq(first_order, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    w_xi, dw_xi = eig.evaluate(xi)
    z_xi, dz_xi, _ = zeta_eval(lambda_bar, xi)
    theta = kappa * z_xi / w_xi
    if not xi > r0:
        raise ConstructionError(f"matching radius {xi!r} is not beyond r0={r0!r}")
    gamma = min(eig.lam / theta ** (spec.sigma - 1.0), 1.0)
    glued = GluedSupersolution(
        spec, lambda_bar, kappa, 1.0 - r0 if delta is None else delta, r0, rho, eig.lam,
        theta, xi, gamma, eig,
        value_mismatch=abs(kappa * z_xi - theta * w_xi),
        slope_mismatch=abs(kappa * dz_xi - theta * dw_xi))
    glued.r = profile_grid(xi)
    glued.u = glued.evaluate(glued.r)[0]
    return glued


def profile_grid(xi: float, n: int = SAMPLE_POINTS, finest: float = 1e-12) -> np.ndarray:
    """n radii in [0, 1): uniform up to xi, geometric towards the boundary beyond it."""
    n_in = n // 2
    inner = np.linspace(0.0, xi, n_in, endpoint=False)
    outer = 1.0 - np.geomspace(1.0 - xi, finest, n - n_in)
    return np.concatenate([inner, outer])


# ---------------------------------------------------------------------------
# Verification


def _gauss_nodes(breaks: Sequence[float], per: int = GAUSS_NODES) -> Tuple[np.ndarray, np.ndarray]:
    x, wts = np.polynomial.legendre.leggauss(per)
    b = np.unique(np.asarray(breaks, dtype=float))
    lo, hi = b[:-1], b[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * wts[None, :]
    return nodes.ravel(), weights.ravel()


def weak_form_gen(spec: ProblemSpec, r, w, u, du, psi, dpsi) -> float:
    """``-int |u'|^(p-2) u' psi' dmu + int V u^sigma psi dmu`` with ``dmu = a S dr``.

    ``r, w`` are quadrature nodes and weights; the other arguments are values there.
    """
    d = 1.0 - r
    measure = spec.a(d) * spec.manifold.S(r) * w
    flux = np.abs(du) ** (spec.p - 2.0) * du
    return float(np.sum((-flux * dpsi + spec.V(d) * u ** spec.sigma * psi) * measure))


def weak_form_19(spec: ProblemSpec, r, w, u, du, phi, dphi) -> float:
    """``-int a |u'|^(p-2) u' (phi/a)' dmu0 + int V u^sigma phi dmu0`` with ``dmu0 = S dr``."""
    d = 1.0 - r
    a = spec.a(d)
    da = -spec.a.derivative(d)  # d/dr of a(1 - r)
    quotient = (dphi * a - phi * da) / a ** 2
    measure = spec.manifold.S(r) * w
    flux = np.abs(du) ** (spec.p - 2.0) * du
    return float(np.sum((-a * flux * quotient + spec.V(d) * u ** spec.sigma * phi) * measure))


@dataclass(frozen=True)
class TestFunction:
    """Radial cutoff ``psi = eta_n phi`` in the distance to the boundary."""
    __test__ = False  # not a pytest class

    cfg: E.CutoffConfig

    @property
    def support_start(self) -> float:
        """Smallest distance to the boundary where psi is nonzero."""
        return self.cfg.delta / (2 * self.cfg.n)

    def breaks(self) -> List[float]:
        c = self.cfg
        return [c.delta / (2 * c.n), c.delta / c.n, c.delta]

    def evaluate(self, r) -> Tuple[np.ndarray, np.ndarray]:
        """``(psi, dpsi/dr)``."""
        d = 1.0 - np.asarray(r, dtype=float)
        d_safe = np.clip(d, 1e-300, 1.0 - 1e-16)
        phi, eta, phi_n, grad_phi = E.cutoff_eval(self.cfg, d_safe)
        deta = E.grad_eta(self.cfg, d_safe)
        ramp = (d_safe > self.cfg.delta / (2 * self.cfg.n)) & (d_safe < self.cfg.delta / self.cfg.n)
        deta = np.where(ramp, deta, 0.0)
        dpsi_dd = grad_phi * eta + phi * deta
        return phi_n, -dpsi_dd

    def to_dict(self) -> dict:
        return {"delta": self.cfg.delta, "n": self.cfg.n, "C1": self.cfg.C1}


def default_test_functions(spec: ProblemSpec,
                           deltas: Sequence[float] = (0.5, 0.25, 0.125, 2 ** -4, 2 ** -5),
                           ns: Sequence[int] = (1, 4, 16, 64)) -> List[TestFunction]:
    """Twenty cutoffs ``eta_n phi`` from the proof's family at varied delta and n."""
    return [TestFunction(E.CutoffConfig.minimal(spec.p, spec.sigma, 1.0, dl, n))
            for dl in deltas for n in ns]


def _quadrature_for(u: GluedSupersolution, tf: TestFunction) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 1 - support_start] that respect every kink of u and psi."""
    d_end = tf.support_start
    knots = u.eig.knots if u.eig.knots is not None else np.linspace(0, u.rho, 200)
    inner = knots[knots < u.xi]
    # Geometric subdivision towards the boundary resolves zeta and V.
    outer_d = np.geomspace(1.0 - u.xi, d_end, max(int(np.log2((1.0 - u.xi) / d_end) * 4), 2))
    edges = [1.0 - b for b in tf.breaks() if 0 < b < 1]
    breaks = np.concatenate([inner, [u.xi], 1.0 - outer_d, edges, [0.0, 1.0 - d_end]])
    breaks = breaks[(breaks >= 0) & (breaks <= 1.0 - d_end)]
    return _gauss_nodes(breaks)


@dataclass
class SupersolutionReport:
    passed: bool
    min_u: float
    max_scaled_residual: float
    witness: Optional[float]
    c1_mismatch: float
    slope_mismatch: float
    ratio_slope_at_r0: float
    weak_values: List[float]
    weak_by_parts: List[float]
    weak_tests: List[dict]
    tol: float
    weak_tol: float
    points: int
    reason: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "passed", "min_u", "max_scaled_residual", "witness", "c1_mismatch", "slope_mismatch",
            "ratio_slope_at_r0", "weak_values", "weak_by_parts", "weak_tests", "tol", "weak_tol",
            "points", "reason")}


def pointwise_residual(u: GluedSupersolution, r) -> Tuple[np.ndarray, np.ndarray]:
    """``(Delta u + V u^sigma, |V u^sigma|)`` at the radii r."""
    val, _, lap = u.evaluate(r)
    source = u.spec.V(1.0 - np.asarray(r, dtype=float)) * val ** u.spec.sigma
    return lap + source, np.abs(source)


def verify_supersolution(spec: ProblemSpec, u: GluedSupersolution, grid: Optional[np.ndarray] = None,
                         tol: float = 1e-8, weak_tol: float = 1e-8,
                         tests: Optional[Sequence[TestFunction]] = None) -> SupersolutionReport:
    """Pointwise and weak checks of ``Delta u + V u^sigma <= 0`` on the unit ball.

    Pointwise: the residual must not exceed ``tol`` times ``|V u^sigma|``.
    Weak: each test integral must not exceed ``weak_tol``.
    """
    _check_setting(spec)
    r = profile_grid(u.xi) if grid is None else np.asarray(grid, dtype=float)
    res, scale = pointwise_residual(u, r)
    val = u.evaluate(r)[0]
    scaled = res / np.where(scale > 0, scale, 1.0)
    bad = np.flatnonzero(res > tol * scale)
    witness = float(r[bad[0]]) if bad.size else None
    c1 = float(abs(u.left_derivative_at_xi() - u.evaluate(u.xi)[1][0]))
    # d/dr (zeta/w) at r0 from the quotient rule; the construction needs it negative.
    w0, dw0 = u.eig.evaluate(u.r0)
    z0, dz0, _ = zeta_eval(u.lambda_bar, u.r0)
    ratio_slope = (dz0 * w0 - z0 * dw0) / w0 ** 2

    weak_values, by_parts, info = [], [], []
    for tf in (default_test_functions(spec) if tests is None else tests):
        x, wts = _quadrature_for(u, tf)
        uv, du, lap = u.evaluate(x)
        psi, dpsi = tf.evaluate(x)
        weak_values.append(weak_form_gen(spec, x, wts, uv, du, psi, dpsi))
        d = 1.0 - x
        by_parts.append(float(np.sum((lap + spec.V(d) * uv ** spec.sigma) * psi
                                     * spec.a(d) * spec.manifold.S(x) * wts)))
        info.append(tf.to_dict())
    reasons = []
    if np.min(val) <= 0:
        reasons.append("u is not positive")
    if witness is not None:
        reasons.append(f"pointwise residual positive at r={witness!r}")
    if max(weak_values) > weak_tol:
        reasons.append(f"weak test integral {max(weak_values):.3e} exceeds {weak_tol:g}")
    if max(u.value_mismatch, u.slope_mismatch) > MATCH_TOL:
        reasons.append("C1 matching at xi exceeds tolerance")
    if ratio_slope > 0:
        reasons.append("zeta/w_rho increases at r0")
    return SupersolutionReport(
        not reasons, float(np.min(val)), float(np.max(scaled)), witness, c1,
        u.slope_mismatch * u.amplitude, float(ratio_slope), weak_values, by_parts, info,
        tol, weak_tol, int(r.size), "; ".join(reasons))


def formulation_gap(spec: ProblemSpec, u: Callable, du: Callable, tf: TestFunction,
                    r_end: Optional[float] = None) -> Tuple[float, float]:
    """Weak integrals of both formulations for ``phi = a psi``; returns ``(eq19, gen)``."""
    end = 1.0 - tf.support_start if r_end is None else r_end
    breaks = np.concatenate([np.linspace(0.0, end, 65),
                             [1.0 - b for b in tf.breaks() if 1.0 - b < end]])
    x, wts = _gauss_nodes(breaks)
    psi, dpsi = tf.evaluate(x)
    d = 1.0 - x
    a = spec.a(d)
    da = -spec.a.derivative(d)
    phi, dphi = a * psi, da * psi + a * dpsi
    uv, duv = u(x), du(x)
    return (weak_form_19(spec, x, wts, uv, duv, phi, dphi),
            weak_form_gen(spec, x, wts, uv, duv, psi, dpsi))


# ---------------------------------------------------------------------------
# Pipeline


def choose_rho(spec: ProblemSpec, lambda_bar: float, r0: float,
               exponents: Sequence[int] = RHO_EXPONENTS, tol: float = 1e-9) -> Tuple[S.EigenResult, list]:
    """Walk rho through ``1 - 2^-j`` until the slope condition holds at r0."""
    tried = []
    for j in exponents:
        rho = 1.0 - 2.0 ** -j
        if rho <= r0:
            continue
        eig = S.first_eigenpair(spec, rho, tol=tol)
        ok, ws, zs = slope_condition(eig, lambda_bar, r0)
        tried.append({"rho": rho, "lambda_rho": eig.lam, "w_slope": ws, "zeta_slope": zs, "ok": ok})
        if ok:
            return eig, tried
    raise ConstructionError(f"slope condition failed for every rho up to 1 - 2^-{exponents[-1]}",
                            actionable="larger rho")


def build_supersolution(spec: ProblemSpec, lambda_bar: Optional[float] = None,
                        eps: Optional[float] = None, kappas: Sequence[float] = DEFAULT_KAPPAS):
    """Scan barrier amplitudes, pick r0, choose rho and glue.

    ``lambda_bar`` defaults to ``eps / 2``.  Returns ``(glued, log)`` where the
    log lists every amplitude and radius tried.
    """
    _check_setting(spec)
    if lambda_bar is None:
        if eps is None:
            raise ParameterError("give lambda_bar or eps")
        lambda_bar = eps / 2.0
    log = {"lambda_bar": lambda_bar, "kappas": []}
    for kappa in kappas:
        scan = scan_delta(spec, lambda_bar, kappa)
        log["kappas"].append(scan.to_dict())
        if scan.delta is not None:
            break
    else:
        raise ConstructionError(
            f"no barrier amplitude in {list(kappas)} gives a negative residual layer",
            actionable="smaller kappa or smaller lambda_bar")
    eig, tried = choose_rho(spec, lambda_bar, scan.r0)
    log["rho"] = tried
    glued = glue(spec, eig, scan.r0, lambda_bar, scan.kappa, scan.delta)
    return glued, log
