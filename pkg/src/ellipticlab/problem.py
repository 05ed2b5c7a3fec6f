"""Problem descriptors on the unit geodesic ball.

Weights and potentials live in the power-log-exponential (PLE) family

    f(d) = c * d^q * L^s * exp(-theta * L^tau),   L = |log d| = -log d,

of the distance ``d = 1 - r`` to the boundary.  Each piece applies on
``d <= d_cut``; beyond the outermost cut the function is continued by a
constant (every hypothesis checked here only looks at a boundary collar).
The family is closed under real powers, which makes ``V^(-beta +- eps)``
exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, ParameterError
from .geometry import ModelManifold

DEFAULT_D_CUT = 0.5


@dataclass(frozen=True)
class Exponents:
    p: float
    sigma: float
    alpha: float
    beta: float

    @property
    def gap(self) -> float:
        """sigma - p + 1, the common denominator."""
        return self.sigma - self.p + 1.0


def exponents(p: float, sigma: float) -> Exponents:
    if not p > 1:
        raise ParameterError(f"need p > 1, got p={p!r}")
    if not sigma > p - 1:
        raise ParameterError(f"need sigma > p - 1, got sigma={sigma!r} <= p - 1 = {p - 1!r}")
    gap = sigma - p + 1.0
    alpha = p * sigma / gap
    beta = (p - 1.0) / gap
    assert alpha > 1, alpha
    return Exponents(float(p), float(sigma), alpha, beta)


@dataclass(frozen=True)
class PlePiece:
    c: float = 1.0
    q: float = 0.0
    s: float = 0.0
    theta: float = 0.0
    tau: float = 1.0
    d_cut: float = DEFAULT_D_CUT

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError(f"PLE coefficient must be positive, got c={self.c!r}")
        if not 0 < self.d_cut <= 1:
            raise ParameterError(f"d_cut must lie in (0, 1], got {self.d_cut!r}")
        if not self.tau >= 1:
            raise ParameterError(f"tau must be >= 1, got {self.tau!r}")

    def log_value(self, d):
        d = np.asarray(d, dtype=float)
        L = -np.log(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(self.c) + self.q * np.log(d)
            if self.s != 0:
                out = out + self.s * np.log(L)
            if self.theta != 0:
                out = out - self.theta * L ** self.tau
        return out

    def log_derivative(self, d):
        """d/dd log f = (q - s/L + theta tau L^(tau-1)) / d."""
        d = np.asarray(d, dtype=float)
        L = -np.log(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = self.q * np.ones_like(L)
            if self.s != 0:
                g = g - self.s / L
            if self.theta != 0:
                g = g + self.theta * self.tau * L ** (self.tau - 1)
        return g / d

    def power(self, e: float) -> "PlePiece":
        return replace(self, c=self.c ** e, q=self.q * e, s=self.s * e,
                       theta=self.theta * e)

    def to_text(self) -> str:
        return (f"{self.c!r}*d^{self.q!r}*L^{self.s!r}"
                f"*exp(-{self.theta!r}*L^{self.tau!r})")


@dataclass(frozen=True)
class PleFunction:
    pieces: Tuple[PlePiece, ...]
    interior: Optional[float] = None

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.d_cut))
        if not pieces:
            raise ParameterError("a PLE function needs at least one piece")
        object.__setattr__(self, "pieces", pieces)
        if self.interior is not None and not self.interior > 0:
            raise ParameterError(f"interior value must be positive, got {self.interior!r}")

    @classmethod
    def single(cls, c=1.0, q=0.0, s=0.0, theta=0.0, tau=1.0, d_cut=DEFAULT_D_CUT):
        return cls((PlePiece(c, q, s, theta, tau, d_cut),))

    @classmethod
    def constant(cls, c: float) -> "PleFunction":
        return cls((PlePiece(c=c, d_cut=1.0),))

    @property
    def leading(self) -> PlePiece:
        """The piece that governs the behaviour as d -> 0."""
        return self.pieces[0]

    @property
    def outer_cut(self) -> float:
        return self.pieces[-1].d_cut

    def _interior_log(self) -> float:
        if self.interior is not None:
            return math.log(self.interior)
        return float(self.pieces[-1].log_value(self.outer_cut))

    def log_eval(self, d):
        d_arr = np.asarray(d, dtype=float)
        if np.any(d_arr <= 0):
            raise DomainError("PLE functions are defined for d > 0 only")
        out = np.full(d_arr.shape, self._interior_log())
        lower = 0.0
        for piece in self.pieces:
            mask = (d_arr > lower) & (d_arr <= piece.d_cut)
            if np.any(mask):
                out[mask] = piece.log_value(d_arr[mask])
            lower = piece.d_cut
        return float(out) if np.ndim(d) == 0 else out

    def __call__(self, d):
        with np.errstate(over="ignore"):
            return np.exp(self.log_eval(d))

    def derivative(self, d):
        """df/dd; zero in the constant interior extension."""
        d_arr = np.asarray(d, dtype=float)
        out = np.zeros(d_arr.shape)
        lower = 0.0
        for piece in self.pieces:
            mask = (d_arr > lower) & (d_arr <= piece.d_cut)
            if np.any(mask):
                dm = d_arr[mask]
                out[mask] = np.exp(piece.log_value(dm)) * piece.log_derivative(dm)
            lower = piece.d_cut
        return float(out) if np.ndim(d) == 0 else out

    def power(self, e: float) -> "PleFunction":
        interior = None if self.interior is None else self.interior ** e
        return PleFunction(tuple(p.power(e) for p in self.pieces), interior)

    def scaled(self, factor: float) -> "PleFunction":
        interior = None if self.interior is None else self.interior * factor
        return PleFunction(tuple(replace(p, c=p.c * factor) for p in self.pieces), interior)

    @property
    def is_constant(self) -> bool:
        return all(p.q == 0 and p.s == 0 and p.theta == 0 for p in self.pieces) and (
            len(self.pieces) == 1 and (self.interior is None or self.interior == self.pieces[0].c))

    def to_text(self) -> str:
        parts = [f"[d<={p.d_cut!r}] {p.to_text()}" for p in self.pieces]
        if self.interior is not None:
            parts.append(f"interior={self.interior!r}")
        return "; ".join(parts)

    def __str__(self):
        return self.to_text()


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_PIECE_RE = re.compile(
    rf"^\s*(?:\[\s*d\s*<=\s*(?P<cut>{_NUM})\s*\]\s*)?"
    rf"(?P<c>{_NUM})\s*\*\s*d\s*\^\s*(?P<q>{_NUM})\s*\*\s*L\s*\^\s*(?P<s>{_NUM})"
    rf"\s*\*\s*exp\(\s*-\s*(?P<theta>{_NUM})\s*\*\s*L\s*\^\s*(?P<tau>{_NUM})\s*\)\s*$")
_INTERIOR_RE = re.compile(rf"^\s*interior\s*=\s*(?P<v>{_NUM})\s*$")


def parse_ple(text: str) -> PleFunction:
    """Parse the canonical text form ``c*d^q*L^s*exp(-theta*L^tau)``.

    Several pieces are separated by ``;`` and may carry a ``[d<=cut]``
    prefix; a trailing ``interior=value`` overrides the constant extension.
    """
    pieces = []
    interior = None
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        m_int = _INTERIOR_RE.match(chunk)
        if m_int:
            interior = float(m_int.group("v"))
            continue
        m = _PIECE_RE.match(chunk)
        if not m:
            raise ParameterError(
                f"cannot parse PLE piece {chunk.strip()!r}; expected "
                "'c*d^q*L^s*exp(-theta*L^tau)' with an optional '[d<=cut]' prefix")
        cut = float(m.group("cut")) if m.group("cut") else DEFAULT_D_CUT
        pieces.append(PlePiece(float(m.group("c")), float(m.group("q")), float(m.group("s")),
                               float(m.group("theta")), float(m.group("tau")), cut))
    return PleFunction(tuple(pieces), interior)


def ple_eval(f: PleFunction, d: float) -> float:
    if not 0 < d <= 1:
        raise DomainError(f"PLE functions are evaluated on d in (0, 1], got d={d!r}")
    return float(f(d))


def ple_power(f: PleFunction, e: float) -> PleFunction:
    return f.power(e)


@dataclass(frozen=True)
class ProblemSpec:
    manifold: ModelManifold
    exps: Exponents
    V: PleFunction
    a: PleFunction = field(default_factory=lambda: PleFunction.constant(1.0))
    R: float = 1.0

    def __post_init__(self):
        if self.R != 1.0:
            raise ParameterError("only the normalised unit ball R = 1 is supported")

    @property
    def p(self) -> float:
        return self.exps.p

    @property
    def sigma(self) -> float:
        return self.exps.sigma

    @property
    def m(self) -> int:
        return self.manifold.m

    def distance(self, r):
        """Distance to the boundary of the ball for a point at radius r."""
        return self.R - np.asarray(r, dtype=float)

    def with_V(self, V: PleFunction) -> "ProblemSpec":
        return replace(self, V=V)

    def to_dict(self) -> dict:
        return {"manifold": self.manifold.to_dict(), "p": self.p, "sigma": self.sigma,
                "alpha": self.exps.alpha, "beta": self.exps.beta,
                "a": self.a.to_text(), "V": self.V.to_text()}


def make_spec(p: float, sigma: float, V: PleFunction, a: Optional[PleFunction] = None,
              manifold: Optional[ModelManifold] = None) -> ProblemSpec:
    return ProblemSpec(manifold or ModelManifold.euclidean(2), exponents(p, sigma), V,
                       a if a is not None else PleFunction.constant(1.0))


# Named problem families used throughout the tests, the CLI and the README.

def counterexample_potential(sigma: float = 3.0, eps: float = 0.25, C: float = 1.0) -> PleFunction:
    """``V = C d^-(sigma+1) |log d|^(-1 - eps (sigma-1))`` of the p = 2 counterexample."""
    if not 0 < eps < 1.0 / (sigma - 1.0):
        raise ParameterError(f"need 0 < eps < 1/(sigma-1), got eps={eps!r}")
    return PleFunction.single(c=C, q=-(sigma + 1.0), s=-1.0 - eps * (sigma - 1.0))


def counterexample_spec(sigma: float = 3.0, eps: float = 0.25, C: float = 1.0,
                        manifold: Optional[ModelManifold] = None) -> ProblemSpec:
    return make_spec(2.0, sigma, counterexample_potential(sigma, eps, C), manifold=manifold)


def log_lower_bound_spec(p: float = 2.0, sigma: float = 3.0, k: float = 0.25,
                         manifold: Optional[ModelManifold] = None) -> ProblemSpec:
    """``a = 1`` and ``V = d^-(sigma+1) |log d|^(-k/beta)`` (volume-growth bound holds)."""
    ex = exponents(p, sigma)
    V = PleFunction.single(q=-(sigma + 1.0), s=-k / ex.beta)
    return make_spec(p, sigma, V, manifold=manifold)


def exp_weight_spec(p: float = 2.0, sigma: float = 3.0, beta0: float = 1.0, theta: float = 1.0,
                    tau: float = 2.0, d_star: float = DEFAULT_D_CUT,
                    manifold: Optional[ModelManifold] = None) -> ProblemSpec:
    """Exponentially small potential with compensating weight.

    ``V = exp(-theta L^tau)`` and ``a = d^(alpha-1) L^beta0 exp(-beta theta L^tau)``
    near the boundary: the exponential-rate bound holds, the pure power bound
    does not.
    """
    ex = exponents(p, sigma)
    if not beta0 > ex.beta:
        raise ParameterError(f"need beta0 > beta = {ex.beta!r}, got {beta0!r}")
    tau_min = max((sigma - p + 1.0) / sigma * (beta0 + 1.0), 1.0)
    if not tau > tau_min:
        raise ParameterError(f"need tau > {tau_min!r}, got tau={tau!r}")
    V = PleFunction.single(theta=theta, tau=tau, d_cut=1.0)
    a = PleFunction.single(q=ex.alpha - 1.0, s=beta0, theta=ex.beta * theta, tau=tau,
                           d_cut=d_star)
    return make_spec(p, sigma, V, a, manifold)
