"""First weighted Dirichlet eigenvalue of ``-Delta`` on a geodesic ball.

The radial eigenfunction solves ``(S w')' + lambda S V w = 0`` on ``(0, rho)``
with ``w(0) = 1``, ``w'(0) = 0`` and ``w(rho) = 0``.  Shooting integrates the
equation outward and adjusts lambda until the first zero of w lands on rho;
a finite-volume discretisation serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate, linalg, optimize

from .errors import DomainError, NumericError, ParameterError, SearchError, UnsupportedFormError
from .problem import PleFunction, ProblemSpec

R_START = 1e-6
GRID_POINTS = 2000
ODE_RTOL = 1e-10
ODE_ATOL = 1e-13
LAMBDA_MAX = 1e12


class Method(str, Enum):
    SHOOTING = "shooting"
    FD_ORACLE = "fd_oracle"


@dataclass
class EigenResult:
    rho: float
    lam: float
    r: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    boundary_residual: float
    ode_residual_norm: float
    method: Method
    dense: Optional[Callable] = field(default=None, repr=False)
    knots: Optional[np.ndarray] = field(default=None, repr=False)

    def evaluate(self, r):
        """``(w, w')`` at arbitrary radii in [0, rho]."""
        r_arr = np.asarray(r, dtype=float)
        if self.dense is None:
            w = np.interp(r_arr, self.r, self.w)
            dw = np.interp(r_arr, self.r, self.dw)
        else:
            w, dw = self.dense(r_arr)
        if np.ndim(r) == 0:
            return float(w), float(dw)
        return w, dw

    def to_row(self) -> dict:
        return {"rho": self.rho, "lambda": self.lam, "boundary_residual": self.boundary_residual,
                "ode_residual": self.ode_residual_norm, "method": self.method.value}


def _check_spec(spec: ProblemSpec):
    if not spec.a.is_constant:
        raise UnsupportedFormError("the radial eigenvalue problem is implemented for constant a")


def _V_of_r(spec: ProblemSpec, rho: float) -> Callable[[np.ndarray], np.ndarray]:
    V = spec.V
    if rho >= 1.0:
        if not V.is_constant:
            raise DomainError("rho = 1 is only allowed for a constant potential")
        c = float(V(0.5))
        return lambda r: np.full(np.shape(r), c) if np.ndim(r) else c
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        at_pole = float(V(1.0))
    if not (math.isfinite(at_pole) and at_pole >= 0):
        raise DomainError(f"V is not finite at the centre of the ball (V = {at_pole!r}); "
                          "the radial problem needs V continuous on [0, rho]")
    return lambda r: V(1.0 - np.asarray(r, dtype=float))


def graded_grid(rho: float, n: int = GRID_POINTS, finest: float = 1e-8) -> np.ndarray:
    """``n`` radii on ``[0, rho]`` whose distance to rho shrinks geometrically."""
    gaps = rho * np.geomspace(1.0, finest, n - 1)
    return np.concatenate([rho - gaps, [rho]])


def _rhs(spec: ProblemSpec, lam: float, Vr):
    M = spec.manifold

    def f(r, y):
        w, v = y
        return [v, -M.mean_curvature(r) * v - lam * Vr(r) * w]
    return f


def _shoot(spec: ProblemSpec, rho: float, lam: float, Vr, dense: bool = False):
    """Integrate to rho or to the first zero of w; returns (solution, first zero or None)."""
    m = spec.m
    V0 = float(Vr(0.0)) if rho < 1 else float(Vr(np.array([0.0]))[0])
    y0 = [1.0 - lam * V0 * R_START ** 2 / (2 * m), -lam * V0 * R_START / m]

    def zero(r, y):
        return y[0]
    zero.terminal = True
    zero.direction = -1
    sol = integrate.solve_ivp(_rhs(spec, lam, Vr), (R_START, rho), y0, method="DOP853",
                              rtol=ODE_RTOL, atol=ODE_ATOL, events=zero, dense_output=dense)
    if sol.status == -1:
        raise NumericError(f"shooting integration failed near r={sol.t[-1]!r}: {sol.message}")
    r_zero = sol.t_events[0][0] if sol.t_events[0].size else None
    return sol, r_zero


def _miss(spec, rho, lam, Vr) -> float:
    """Signed miss: w(rho) without interior zero, else w'(r*)(rho - r*) < 0."""
    sol, r_zero = _shoot(spec, rho, lam, Vr)
    if r_zero is None or r_zero >= rho:
        return float(sol.y[0, -1])
    dw = float(sol.y_events[0][0][1])
    return dw * (rho - r_zero) if dw < 0 else -(rho - r_zero)


def tent_rayleigh(spec: ProblemSpec, rho: float) -> float:
    """Rayleigh quotient of the trial function ``1 - r/rho``: an upper bound for lambda."""
    Vr = _V_of_r(spec, rho)
    x, wts = np.polynomial.legendre.leggauss(400)
    r = 0.5 * rho * (x + 1.0)
    wts = 0.5 * rho * wts
    S = spec.manifold.S(r)
    num = np.sum(wts * S) / rho ** 2
    den = np.sum(wts * S * Vr(r) * (1.0 - r / rho) ** 2)
    return float(num / den)


def first_eigenpair(spec: ProblemSpec, rho: float, tol: float = 1e-9,
                    lam_max: float = LAMBDA_MAX, grid_points: int = GRID_POINTS) -> EigenResult:
    """Smallest lambda whose shooting solution first vanishes exactly at rho.

    The bracket starts from the tent-function Rayleigh quotient (an upper
    bound), halving for the lower end and doubling for the upper end; the
    root of the signed miss is then refined with Brent's method.
    """
    _check_spec(spec)
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho!r}")
    Vr = _V_of_r(spec, rho)
    guess = tent_rayleigh(spec, rho)
    lo, hi = guess, guess
    f_lo = _miss(spec, rho, lo, Vr)
    if f_lo > 0:
        f_hi = f_lo
        while f_hi > 0:
            hi *= 2.0
            if hi > lam_max:
                raise SearchError(f"no sign change of w(rho) for lambda up to lambda_max={lam_max!r}")
            f_hi = _miss(spec, rho, hi, Vr)
        lo = hi / 2.0
    else:
        f_hi = f_lo
        while f_lo <= 0:
            lo /= 2.0
            if lo < 1e-300:
                raise SearchError("lower bracket for lambda underflowed")
            f_lo = _miss(spec, rho, lo, Vr)
        hi = lo * 2.0
    lam = optimize.brentq(lambda x: _miss(spec, rho, x, Vr), lo, hi, xtol=1e-300,
                          rtol=4 * np.finfo(float).eps, maxiter=200)
    sol, r_zero = _shoot(spec, rho, lam, Vr, dense=True)
    end = sol.t[-1]

    def dense(r):
        r = np.asarray(r, dtype=float)
        w = np.empty_like(r)
        dw = np.empty_like(r)
        V0 = float(np.atleast_1d(Vr(np.array([0.0])))[0])
        small = r < R_START
        w[small] = 1.0 - lam * V0 * r[small] ** 2 / (2 * spec.m)
        dw[small] = -lam * V0 * r[small] / spec.m
        big = ~small
        if np.any(big):
            y = sol.sol(np.minimum(r[big], end))
            w[big], dw[big] = y[0], y[1]
        return w, dw

    r = graded_grid(rho, grid_points)
    w, dw = dense(r)
    boundary = abs(float(sol.y[0, -1])) if r_zero is None else abs(rho - r_zero) * abs(dw[-1])
    if boundary > tol:
        raise NumericError(f"boundary residual {boundary:.3e} exceeds tol {tol:.1e} at rho={rho!r}")
    w[-1] = 0.0
    res = _ode_residual(spec, lam, Vr, dense, r[1:-1])
    knots = np.concatenate([[0.0], sol.t[sol.t < rho], [rho]])
    return EigenResult(rho, float(lam), r, w, dw, boundary, res, Method.SHOOTING, dense, knots)


def _ode_residual(spec, lam, Vr, dense, r) -> float:
    """sup of |w'' + (m-1) psi'/psi w' + lambda V w| relative to the largest term."""
    r = r[(r > 10 * R_START)]
    h = 1e-4 * np.minimum(r, np.maximum(r[-1] - r, 1e-12) + 1e-12)
    h = np.maximum(h, 1e-9)
    fp = [dense(r + k * h)[1] for k in (-2, -1, 1, 2)]
    d2 = (fp[0] - 8 * fp[1] + 8 * fp[2] - fp[3]) / (12 * h)
    w, dw = dense(r)
    terms = np.abs(np.stack([d2, spec.manifold.mean_curvature(r) * dw, lam * Vr(r) * w]))
    res = np.abs(d2 + spec.manifold.mean_curvature(r) * dw + lam * Vr(r) * w)
    scale = np.maximum(np.max(terms, axis=0), 1e-300)
    return float(np.max(res / scale))


def rayleigh_quotient(spec: ProblemSpec, w, rho: float, r: Optional[np.ndarray] = None,
                      dw: Optional[np.ndarray] = None, rtol: float = 1e-12) -> float:
    """``int w'^2 S dr / int V w^2 S dr`` over (0, rho).

    ``w`` may be an EigenResult (integrated through its dense solution), a
    callable returning ``(w, w')`` for arrays of radii, or samples on the
    grid ``r`` (with optional derivative samples ``dw``).
    """
    Vr = _V_of_r(spec, rho)
    S = spec.manifold.S
    knots = None
    if isinstance(w, EigenResult):
        knots = w.knots
        w = w.evaluate
    if callable(w):
        # Gauss-Legendre on each integrator step, where the dense solution is smooth.
        if knots is None:
            knots = np.concatenate([[0.0], rho - rho * np.geomspace(1.0, 1e-10, 4000)[1:], [rho]])
        x, wts = np.polynomial.legendre.leggauss(12)
        a, b = knots[:-1, None], knots[1:, None]
        nodes = (0.5 * (b - a) * (x + 1.0) + a).ravel()
        weights = (0.5 * (b - a) * wts).ravel()
        wv, dv = w(nodes)
        w_end = float(np.asarray(w(np.array([rho]))[0])[0])
        if abs(w_end) > 1e-6 * max(np.max(np.abs(wv)), 1e-300):
            raise DomainError("trial function must vanish at rho")
        Sn = S(nodes)
        num = float(np.sum(weights * dv ** 2 * Sn))
        den = float(np.sum(weights * Vr(nodes) * wv ** 2 * Sn))
    else:
        if r is None:
            raise ParameterError("sampled w needs its grid r")
        r = np.asarray(r, dtype=float)
        wv = np.asarray(w, dtype=float)
        if abs(wv[-1]) > 1e-6 * np.max(np.abs(wv)):
            raise DomainError("trial function must vanish at rho")
        dv = np.gradient(wv, r, edge_order=2) if dw is None else np.asarray(dw, dtype=float)
        Sr = S(r)
        num = integrate.simpson(dv ** 2 * Sr, x=r)
        den = integrate.simpson(Vr(r) * wv ** 2 * Sr, x=r)
    if not den > 0:
        raise DomainError("degenerate trial function: zero denominator in the Rayleigh quotient")
    return float(num / den)


@dataclass
class EigenScan:
    rows: List[EigenResult]
    monotone: bool
    limit_estimate: float
    flag: str

    @property
    def rhos(self):
        return [e.rho for e in self.rows]

    @property
    def lambdas(self):
        return [e.lam for e in self.rows]

    def to_dict(self) -> dict:
        return {"rows": [e.to_row() for e in self.rows], "monotone": self.monotone,
                "limit_estimate": self.limit_estimate, "flag": self.flag}


def richardson_limit(rhos: Sequence[float], lams: Sequence[float]) -> float:
    """Linear extrapolation of lambda in ``h = 1 - rho`` to h = 0 from the last two points."""
    if len(rhos) < 2:
        return float(lams[-1])
    h1, h2 = 1 - rhos[-2], 1 - rhos[-1]
    l1, l2 = lams[-2], lams[-1]
    if h1 == h2:
        return float(l2)
    return float(l2 - (l1 - l2) * h2 / (h1 - h2))


def eigen_scan(spec: ProblemSpec, rhos: Sequence[float], tol: float = 1e-9,
               executor=None) -> EigenScan:
    """lambda(rho) along increasing radii; flags non-monotone output as a solver failure.

    ``executor`` may be any object with a ``map`` method (e.g. a
    ``concurrent.futures`` executor); results are ordered by rho regardless.
    """
    rhos = list(rhos)
    if any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise ParameterError("rho list must be strictly increasing")
    mapper = map if executor is None else executor.map
    rows = sorted(mapper(lambda r: first_eigenpair(spec, r, tol), rhos), key=lambda e: e.rho)
    lams = [e.lam for e in rows]
    monotone = all(b < a for a, b in zip(lams, lams[1:]))
    flag = "ok" if monotone else "non-monotone lambda(rho): solver tolerance failure"
    return EigenScan(rows, monotone, richardson_limit(rhos, lams), flag)


def fd_eigen_oracle(spec: ProblemSpec, rho: float, N: int = 2000) -> EigenResult:
    """Smallest eigenvalue of a vertex-centred finite-volume discretisation.

    Nodes ``r_i = i rho / N``; fluxes use S at cell faces, masses integrate S
    over each control volume, w(rho) = 0 and the flux vanishes at the pole.
    The symmetric generalised problem ``A w = lambda B w`` with diagonal B is
    reduced to a tridiagonal standard problem.
    """
    _check_spec(spec)
    if N < 50:
        raise ParameterError(f"N must be at least 50, got {N}")
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho!r}")
    Vr = _V_of_r(spec, rho)
    S = spec.manifold.S
    h = rho / N
    r = np.linspace(0.0, rho, N + 1)
    faces = 0.5 * (r[:-1] + r[1:])            # faces[i] between r_i and r_{i+1}
    Sf = S(faces)
    # Control volume masses by Simpson on each half cell.
    left = np.concatenate([[0.0], faces[:-1]])
    right = faces
    nodes = r[:-1]

    def simpson(a, b):
        return (b - a) / 6.0 * (S(a) + 4 * S(0.5 * (a + b)) + S(b))
    mass = simpson(left, nodes) + simpson(nodes, right)
    Vn = Vr(nodes) if rho < 1 else Vr(nodes)
    B = mass * Vn
    diag = np.empty(N)
    diag[0] = Sf[0] / h
    diag[1:] = (Sf[:-1] + Sf[1:]) / h
    off = -Sf[:-1] / h
    scale = 1.0 / np.sqrt(B)
    d_std = diag * scale ** 2
    e_std = off * scale[:-1] * scale[1:]
    try:
        vals, vecs = linalg.eigh_tridiagonal(d_std, e_std, select="i", select_range=(0, 0))
    except linalg.LinAlgError as exc:
        raise NumericError(f"tridiagonal eigen-solver did not converge: {exc}")
    lam = float(vals[0])
    w = np.concatenate([vecs[:, 0] * scale, [0.0]])
    w /= w[0]
    dw = np.gradient(w, r, edge_order=2)
    dw[0] = 0.0
    # Discrete residual of the scheme, relative to the flux scale.
    flux = Sf * np.diff(w) / h
    div = np.concatenate([[flux[0]], np.diff(flux)])
    res = np.abs(div + lam * B * w[:-1])
    ode_res = float(np.max(res) / max(np.max(np.abs(div)), 1e-300))
    return EigenResult(rho, lam, r, w, dw, 0.0, ode_res, Method.FD_ORACLE)


# -- test functions for the bottom of the spectrum ----------------------------------

@dataclass
class TestFunctionCertificate:
    __test__ = False  # not a pytest class

    alpha: float
    verdict: str
    beta0: float
    beta1: float
    C0: float
    gamma: float
    numerator: float = math.nan
    denominator: float = math.nan
    vanishing_ratios: List[float] = field(default_factory=list)
    reason: str = ""

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator

    @property
    def C(self) -> float:
        return self.gamma ** 2 / self.C0

    @property
    def bound(self) -> float:
        return self.C * self.alpha

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "verdict": self.verdict, "reason": self.reason,
                "beta0": self.beta0, "beta1": self.beta1, "C0": self.C0, "gamma": self.gamma,
                "C": self.C, "ratio": self.ratio if self.denominator > 0 else None,
                "bound": self.bound, "vanishing_ratios": self.vanishing_ratios}


def power_bounds(V: PleFunction, slack: float = 0.5):
    """Exponents ``beta0 <= beta1`` and constant C0 with ``C0 d^-beta0 <= V <= C1 d^-beta1``.

    A negative (positive) log power of the leading piece costs ``slack`` in
    beta0 (beta1); exponential factors are not handled.
    """
    if not isinstance(V, PleFunction):
        raise UnsupportedFormError("power bounds need a PLE potential")
    lead = V.leading
    if lead.theta != 0:
        raise UnsupportedFormError("two-sided power bounds need a potential without exp factor")
    q = -lead.q
    beta0 = q - slack if lead.s < 0 else q
    beta1 = q + slack if lead.s > 0 else q
    d = np.exp(-np.linspace(1e-9, 700.0, 200001))
    C0 = float(np.exp(np.min(V.log_eval(d) + beta0 * np.log(d))))
    return beta0, beta1, C0


def spectral_test_function(spec: ProblemSpec, alpha: float, slack: float = 0.5,
                           vanishing_deltas: Sequence[float] = tuple(2.0 ** -j for j in range(4, 17))
                           ) -> TestFunctionCertificate:
    """Certificate that ``phi = exp(-sqrt(alpha) d^-gamma)`` has Rayleigh quotient <= C alpha.

    ``gamma = (beta0 - 2)/2`` with beta0 from the two-sided power bound on V;
    the collar mass of phi^2 must also vanish faster than delta^3.
    """
    from .growth import collar_integral
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    beta0, beta1, C0 = power_bounds(spec.V, slack)
    gamma = (beta0 - 2.0) / 2.0
    if not beta0 > 2:
        return TestFunctionCertificate(alpha, "hypothesis violated", beta0, beta1, C0, gamma,
                                       reason=f"need beta0 > 2, got {beta0!r}")
    sa = math.sqrt(alpha)

    def log_phi2(d):
        return -2.0 * sa * d ** (-gamma)

    num = collar_integral(spec, lambda d: math.log(gamma ** 2 * alpha)
                          - (2 * gamma + 2) * np.log(d) + log_phi2(d), 0.0, 1.0)
    den = collar_integral(spec, lambda d: spec.V.log_eval(d) + log_phi2(d), 0.0, 1.0)
    vanish = []
    for delta in vanishing_deltas:
        mass = collar_integral(spec, log_phi2, delta, min(2 * delta, 1.0))
        vanish.append(mass / delta ** 3)
    cert = TestFunctionCertificate(alpha, "PASS", beta0, beta1, C0, gamma, num, den, vanish)
    # o(delta^2) is read off the small-delta end: delta^-3 times the collar mass falls.
    tail = vanish[-3:]
    decays = all(b < a or b == 0 for a, b in zip(tail, tail[1:])) and vanish[-1] < vanish[0]
    if not den > 0:
        cert.verdict, cert.reason = "FAIL", "zero denominator"
    elif cert.ratio > cert.bound * (1 + 1e-9):
        cert.verdict, cert.reason = "FAIL", f"ratio {cert.ratio!r} exceeds {cert.bound!r}"
    elif not decays:
        cert.verdict, cert.reason = "FAIL", "collar mass of phi^2 does not vanish like o(delta^2)"
    return cert
