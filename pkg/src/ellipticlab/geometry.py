"""Riemannian model manifolds in polar coordinates.

A model is ``dr^2 + psi(r)^2 dtheta^2`` on R^m; everything radial reduces to
the warping function ``psi``.  The sphere of radius r has area
``S(r) = omega_m psi(r)^(m-1)`` and the Laplace-Beltrami operator acting on a
radial function is ``u'' + (m-1) psi'/psi u'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError, ParameterError

R_MIN = 1e-12


class WarpKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"
    SERIES = "series"


@dataclass(frozen=True)
class WarpingFunction:
    """Warping function psi of a model manifold.

    For ``kind == SERIES`` the function is the odd power series
    ``r + c3 r^3 + c5 r^5 + ...`` with ``coefficients = (c3, c5, ...)``,
    truncated after ``order`` (highest power kept) and only trusted on
    ``r <= radius``.
    """

    kind: WarpKind = WarpKind.EUCLIDEAN
    coefficients: Tuple[float, ...] = ()
    order: int = 12
    radius: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", WarpKind(self.kind))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind is not WarpKind.SERIES and self.coefficients:
            raise ParameterError("coefficients are only meaningful for series warps")

    @classmethod
    def euclidean(cls) -> "WarpingFunction":
        return cls(WarpKind.EUCLIDEAN)

    @classmethod
    def hyperbolic(cls) -> "WarpingFunction":
        return cls(WarpKind.HYPERBOLIC)

    @classmethod
    def series(cls, coefficients: Sequence[float], order: int = 12,
               radius: float = 1.5) -> "WarpingFunction":
        return cls(WarpKind.SERIES, tuple(coefficients), order, radius)

    def _series_terms(self):
        powers = [1]
        coefs = [1.0]
        for i, c in enumerate(self.coefficients):
            power = 2 * i + 3
            if power > self.order:
                break
            powers.append(power)
            coefs.append(c)
        return np.array(powers, dtype=float), np.array(coefs)

    def __call__(self, r):
        return self.evaluate(r)[0]

    def evaluate(self, r):
        """Return ``(psi(r), psi'(r))``; works on scalars and arrays."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise DomainError(f"warping function evaluated at negative radius r={r!r}")
        if self.kind is WarpKind.EUCLIDEAN:
            psi, dpsi = r_arr.copy(), np.ones_like(r_arr)
        elif self.kind is WarpKind.HYPERBOLIC:
            with np.errstate(over="ignore"):
                psi, dpsi = np.sinh(r_arr), np.cosh(r_arr)
        else:
            if np.any(r_arr > self.radius):
                raise DomainError(
                    f"series warp evaluated at r={float(np.max(r_arr))!r} beyond its "
                    f"validity radius {self.radius}")
            powers, coefs = self._series_terms()
            rr = r_arr[..., None]
            psi = np.sum(coefs * rr ** powers, axis=-1)
            dpsi = np.sum(coefs * powers * rr ** (powers - 1), axis=-1)
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(dpsi))):
            raise DomainError(f"non-finite warping function value at r={r!r}")
        positive = r_arr > 0
        if np.any(psi[positive] <= 0):
            raise DomainError(f"warping function is not positive at r={r!r}")
        if np.ndim(r) == 0:
            return float(psi), float(dpsi)
        return psi, dpsi

    def log_derivative(self, r):
        """psi'/psi, evaluated stably for the closed-form kinds."""
        r_arr = np.asarray(r, dtype=float)
        if self.kind is WarpKind.EUCLIDEAN:
            out = 1.0 / r_arr
        elif self.kind is WarpKind.HYPERBOLIC:
            out = 1.0 / np.tanh(r_arr)
        else:
            psi, dpsi = self.evaluate(r_arr)
            out = dpsi / psi
        return float(out) if np.ndim(r) == 0 else out

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is WarpKind.SERIES:
            d.update(coefficients=list(self.coefficients), order=self.order,
                     radius=self.radius)
        return d


def warp_eval(w: WarpingFunction, r: float) -> Tuple[float, float]:
    """``(psi(r), psi'(r))``; at ``r = 0`` returns the limit pair ``(0, 1)``."""
    if r == 0:
        return 0.0, 1.0
    return w.evaluate(float(r))


def unit_sphere_area(m: int) -> float:
    """Area of the unit sphere S^(m-1) in R^m: ``2 pi^(m/2) / Gamma(m/2)``."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


@dataclass(frozen=True)
class ModelManifold:
    m: int
    psi: WarpingFunction = field(default_factory=WarpingFunction.euclidean)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got m={self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def euclidean(cls, m: int) -> "ModelManifold":
        return cls(m, WarpingFunction.euclidean())

    @classmethod
    def hyperbolic(cls, m: int) -> "ModelManifold":
        return cls(m, WarpingFunction.hyperbolic())

    @property
    def omega_m(self) -> float:
        return unit_sphere_area(self.m)

    def S(self, r):
        """Vectorised surface area of the geodesic sphere of radius r."""
        r_arr = np.asarray(r, dtype=float)
        psi = np.where(r_arr > 0, self.psi.evaluate(np.maximum(r_arr, 0.0))[0], 0.0)
        out = self.omega_m * psi ** (self.m - 1)
        return float(out) if np.ndim(r) == 0 else out

    def mean_curvature(self, r):
        """Coefficient ``(m-1) psi'/psi`` of the first-order radial term."""
        return (self.m - 1) * self.psi.log_derivative(r)

    def to_dict(self) -> dict:
        return {"m": self.m, "psi": self.psi.to_dict()}


def surface_area(M: ModelManifold, r: float) -> float:
    if r <= 0:
        raise DomainError(f"surface_area needs r > 0, got r={r!r}")
    return M.S(float(r))


def ball_volume(M: ModelManifold, R: float, rtol: float = 1e-12) -> float:
    """Riemannian volume of the geodesic ball: integral of S over [0, R]."""
    if R <= 0:
        raise DomainError(f"ball_volume needs R > 0, got R={R!r}")
    value, err = integrate.quad(M.S, 0.0, float(R), epsabs=0.0, epsrel=rtol, limit=200)
    if not np.isfinite(value) or err > max(1e3 * rtol * abs(value), 1e-300):
        raise NumericError(f"ball volume quadrature did not converge (error estimate {err:.3e})")
    return value


def fd_derivatives(u: Callable[[float], float], r: float, h: float) -> Tuple[float, float]:
    """Fourth-order central differences for u'(r) and u''(r)."""
    f = [u(r + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    return d1, d2


def default_fd_step(r: float) -> float:
    gap = abs(1.0 - r)
    scale = min(r, gap) if gap > 0 else r
    return 1e-3 * scale


def radial_laplacian(M: ModelManifold, u: Callable[[float], float], r: float,
                     derivatives: Optional[Callable[[float], Tuple[float, float]]] = None,
                     h: Optional[float] = None, r_min: float = R_MIN) -> float:
    """Laplace-Beltrami operator of the radial function u at radius r.

    ``derivatives(r)`` may supply ``(u'(r), u''(r))`` analytically; otherwise
    fourth-order central differences with step ``h`` are used.
    """
    if r < r_min:
        raise DomainError(
            f"radial Laplacian requested at r={r!r} below r_min={r_min!r} "
            "(first-order coefficient is singular at the pole)")
    if derivatives is not None:
        d1, d2 = derivatives(r)
    else:
        step = default_fd_step(r) if h is None else h
        if step >= r:
            raise DomainError(f"finite-difference step h={step!r} reaches the pole from r={r!r}")
        d1, d2 = fd_derivatives(u, r, step)
    return d2 + M.mean_curvature(r) * d1
