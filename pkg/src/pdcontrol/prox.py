"""Closed-form proximal maps for the control regularizers.

All operations are pointwise on flat arrays; bounds are scalars.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError
from .grid import Grid


def _check_bounds(a, b):
    if not a < b:
        raise InvalidParameterError(f"invalid box bounds: need a < b, got a={a}, b={b}")


def project_box(v, a: float, b: float) -> np.ndarray:
    _check_bounds(a, b)
    return np.clip(v, a, b)


def shrink(v, zeta: float) -> np.ndarray:
    """Soft thresholding ``sgn(v) * max(|v| - zeta, 0)`` with ``sgn(0) = 0``."""
    if zeta < 0:
        raise InvalidParameterError("shrinkage threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - zeta, 0.0)


def prox_primal_box(u_prev, sstar_p, r: float, alpha: float, a: float, b: float) -> np.ndarray:
    """argmin over [a, b] of ``alpha/2 u^2 + (S* p) u + (u - u_prev)^2 / (2 r)``."""
    if not r > 0 or alpha < 0:
        raise InvalidParameterError("need r > 0 and alpha >= 0")
    v = -(np.asarray(sstar_p) - np.asarray(u_prev) / r) / (alpha + 1.0 / r)
    return project_box(v, a, b)


def prox_primal_l1_box(u_prev, sstar_p, r: float, alpha: float, mu: float,
                       a: float, b: float) -> np.ndarray:
    """Same subproblem as :func:`prox_primal_box` plus ``mu * |u|``."""
    if not r > 0 or alpha < 0 or mu < 0:
        raise InvalidParameterError("need r > 0, alpha >= 0 and mu >= 0")
    if not a < 0 < b:
        raise InvalidParameterError("L1 + box regularizer requires a < 0 < b")
    denom = alpha * r + 1.0
    v = (np.asarray(u_prev) - r * np.asarray(sstar_p)) / denom
    return project_box(shrink(v, mu * r / denom), a, b)


def dual_update(sy, p_prev, y_d, s: float) -> np.ndarray:
    """Maximizer of the dual subproblem for ``f*(p) = |p|^2/2 + (p, y_d)``.

    ``sy`` is the full (affine) state at the extrapolated control.
    """
    if not s > 0:
        raise InvalidParameterError("dual step s must be positive")
    return (np.asarray(sy) + np.asarray(p_prev) / s - np.asarray(y_d)) / (1.0 + 1.0 / s)


def moreau_check(w, s: float, prox_f: Callable, prox_fstar: Callable,
                 grid: Optional[Grid] = None) -> float:
    """Defect of the scaled Moreau decomposition.

    ``prox_f(x, t)`` must return argmin ``phi(v) + |v - x|^2 / (2 t)`` and
    ``prox_fstar`` the same for the conjugate.  Returns
    ``|w - prox_f(w, s) - s * prox_fstar(w / s, 1 / s)|``.
    """
    w = np.asarray(w, dtype=float)
    resid = w - prox_f(w, s) - s * prox_fstar(w / s, 1.0 / s)
    return grid.norm(resid) if grid is not None else float(np.linalg.norm(resid))


@dataclass(frozen=True)
class BoxIndicator:
    a: float
    b: float

    def __post_init__(self):
        _check_bounds(self.a, self.b)

    mu = 0.0

    def prox(self, u_prev, sstar_p, r, alpha):
        return prox_primal_box(u_prev, sstar_p, r, alpha, self.a, self.b)

    def penalty(self, u, grid: Grid) -> float:
        return 0.0


@dataclass(frozen=True)
class L1Box:
    mu: float
    a: float
    b: float

    def __post_init__(self):
        if self.mu < 0:
            raise InvalidParameterError("mu must be nonnegative")
        if not self.a < 0 < self.b:
            raise InvalidParameterError("L1 + box regularizer requires a < 0 < b")

    def prox(self, u_prev, sstar_p, r, alpha):
        return prox_primal_l1_box(u_prev, sstar_p, r, alpha, self.mu, self.a, self.b)

    def penalty(self, u, grid: Grid) -> float:
        return self.mu * grid.weight * float(np.abs(u).sum())


Regularizer = BoxIndicator | L1Box
