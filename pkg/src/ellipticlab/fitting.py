"""Least-squares fits of scaling exponents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np


@dataclass(frozen=True)
class LinearFit:
    names: tuple
    coef: np.ndarray
    stderr: np.ndarray
    residuals: np.ndarray

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def se(self, name: str) -> float:
        return float(self.stderr[self.names.index(name)])

    def predict(self, columns: Dict[str, np.ndarray]) -> np.ndarray:
        X = np.column_stack([np.broadcast_to(columns[n], np.shape(columns[self.names[-1]]))
                             for n in self.names])
        return X @ self.coef


def linear_fit(y: Sequence[float], columns: Dict[str, Sequence[float]]) -> LinearFit:
    """Ordinary least squares of ``y`` on the named regressor columns.

    Standard errors use the residual variance; with as many parameters as
    points they are reported as zero.
    """
    y = np.asarray(y, dtype=float)
    names = tuple(columns)
    X = np.column_stack([np.broadcast_to(np.asarray(columns[n], dtype=float), y.shape)
                         for n in names])
    # Column scaling keeps the normal matrix well conditioned.
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    coef_s, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    coef = coef_s / scale
    resid = y - X @ coef
    dof = y.size - len(names)
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.pinv(Xs.T @ Xs)
        stderr = np.sqrt(np.maximum(np.diag(cov), 0.0)) / scale
    else:
        stderr = np.zeros(len(names))
    return LinearFit(names, coef, stderr, resid)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Fit ``log y = c + slope log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    return linear_fit(np.log(np.asarray(y, dtype=float)), {"const": np.ones_like(lx), "slope": lx})


def midpoint_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Local log-log slope at the middle point of three, by a parabola in log space."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size != 3:
        raise ValueError("midpoint_slope needs exactly three points")
    coeffs = np.polyfit(lx, ly, 2)
    return float(2 * coeffs[0] * lx[1] + coeffs[1])
