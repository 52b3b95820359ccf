"""Error and sparsity measures for computed controls."""
from __future__ import annotations

import numpy as np

from ..solver import ExactSolution, relative_error


def compute_errors(u, y, exact: ExactSolution, control_grid, state_grid) -> dict:
    """Absolute and relative weighted L2 errors of ``(u, y)`` against ``exact``."""
    eu, eu_rel = relative_error(u, exact.u, control_grid)
    ey, ey_rel = relative_error(y, exact.y, state_grid)
    return {"err_u_abs": eu, "err_u_rel": eu_rel, "err_y_abs": ey, "err_y_rel": ey_rel}


def noz(u, threshold: float = 1e-8) -> float:
    """Fraction of (interior) nodes where ``|u| > threshold``."""
    u = np.asarray(u)
    if u.size == 0:
        return 0.0
    return float(np.mean(np.abs(u) > threshold))
