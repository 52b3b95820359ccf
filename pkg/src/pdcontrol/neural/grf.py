"""Zero-boundary Gaussian random fields on [0, 1] via a sine Karhunen-Loeve sum.

Covariance ``49^2 (-Lap + 49 I)^{-2.5}`` with Dirichlet data has eigenpairs
``(sigma_k^2, sqrt(2) sin(k pi x))`` where ``sigma_k = 49 (k^2 pi^2 + 49)^{-1.25}``.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError

GRF_SCALE = 49.0
GRF_SHIFT = 49.0
GRF_POWER = 2.5


def grf_mode_std(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return GRF_SCALE * (k**2 * np.pi**2 + GRF_SHIFT) ** (-GRF_POWER / 2.0)


def grf_basis(n_points: int) -> np.ndarray:
    """``(K, n_points)`` matrix of ``sigma_k sqrt(2) sin(k pi x_j)``, ``K = n_points - 1``."""
    if n_points < 3:
        raise InvalidParameterError("need at least 3 sample points")
    x = np.linspace(0.0, 1.0, n_points)
    k = np.arange(1, n_points)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(k, x))
    basis[:, [0, -1]] = 0.0  # sin(k pi) is not exactly 0 in floating point
    return grf_mode_std(k)[:, None] * basis


def sample_grf(seed, n_points: int, n_samples: int | None = None) -> np.ndarray:
    """Draw fields at ``n_points`` equi-spaced nodes of [0, 1] (boundary included).

    Returns shape ``(n_points,)`` for a single draw or ``(n_samples, n_points)``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    basis = grf_basis(n_points)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    xi = rng.standard_normal((1 if n_samples is None else n_samples, basis.shape[0]))
    out = xi @ basis
    return out[0] if n_samples is None else out
