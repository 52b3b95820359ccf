"""Finite-difference state/adjoint solvers exposed as solution operators.

The elliptic operator is ``-nu * Lap + c * I`` with zero Dirichlet data on the
unit interval/square (3-/5-point stencil).  The parabolic operator marches
backward Euler steps ``(I - tau * Lap) y_n = y_{n-1} + tau * rhs_n`` and its
adjoint is the exact transpose of that march, so the adjoint identity holds to
round-off in the weighted inner product of :class:`~pdcontrol.grid.Grid`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import fft

from .errors import InvalidGridError, InvalidParameterError, ShapeError, SolverFailure
from .grid import Grid

logger = logging.getLogger(__name__)

# Above this many unknowns solve_spd switches from sparse LU to PCG.
DIRECT_SOLVE_LIMIT = 40_000
CG_RTOL = 1e-12


@dataclass(frozen=True)
class EllipticProblem:
    nu: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidParameterError("diffusion coefficient nu must be positive")
        if self.c < 0:
            raise InvalidParameterError("reaction coefficient c must be nonnegative")


def _laplacian_1d(n_cells: int) -> sp.csr_matrix:
    m = n_cells - 1
    h = 1.0 / n_cells
    main = np.full(m, 2.0 / h**2)
    off = np.full(m - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def assemble_elliptic(grid: Grid, problem: EllipticProblem = EllipticProblem()) -> sp.csr_matrix:
    """Sparse matrix of ``-nu * Lap + c * I`` over the interior nodes."""
    if grid.n_cells < 2:
        raise InvalidGridError("grid has no interior nodes (n_cells < 2)")
    lap = _laplacian_1d(grid.n_cells)
    if grid.dim == 2:
        eye = sp.identity(grid.n_interior, format="csr")
        lap = sp.kron(lap, eye, format="csr") + sp.kron(eye, lap, format="csr")
    mat = problem.nu * lap
    if problem.c:
        mat = mat + problem.c * sp.identity(mat.shape[0], format="csr")
    return sp.csr_matrix(mat)


def solve_spd(matrix, rhs, method: str = "auto", max_iter: Optional[int] = None) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for a sparse SPD matrix.

    ``method`` is ``"direct"`` (sparse LU), ``"cg"`` (Jacobi-preconditioned CG
    with relative tolerance 1e-12) or ``"auto"`` which picks by size.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or rhs.shape != (n,):
        raise ShapeError(f"matrix {matrix.shape} incompatible with rhs {rhs.shape}")
    if not np.any(rhs):
        return np.zeros(n)
    if method == "auto":
        method = "direct" if n <= DIRECT_SOLVE_LIMIT else "cg"
    if method == "direct":
        return spla.spsolve(sp.csc_matrix(matrix), rhs)
    if method != "cg":
        raise InvalidParameterError(f"unknown solve method {method!r}")
    diag = matrix.diagonal()
    precond = spla.LinearOperator((n, n), matvec=lambda v: v / diag)
    x, info = spla.cg(matrix, rhs, rtol=CG_RTOL, atol=0.0, M=precond,
                      maxiter=max_iter or 10 * n)
    res = np.linalg.norm(matrix @ x - rhs) / np.linalg.norm(rhs)
    if info != 0 or res > 10 * CG_RTOL:
        raise SolverFailure("conjugate gradient did not converge", res)
    return x


class SolutionOperator:
    """Affine control-to-state map ``u -> S u + offset``.

    ``apply_linear``/``apply_adjoint`` act on the linear part only; the
    convergence conditions and norm estimates refer to that part.
    ``pde_solves_per_apply`` is 1 for discretized PDEs and 0 for surrogates.
    """

    def __init__(self, control_grid: Grid, state_grid: Grid,
                 forward: Callable[[np.ndarray], np.ndarray],
                 adjoint: Callable[[np.ndarray], np.ndarray],
                 offset: Optional[np.ndarray] = None,
                 norm_estimate: Optional[float] = None,
                 pde_solves_per_apply: int = 1,
                 affine: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 label: str = ""):
        self.control_grid = control_grid
        self.state_grid = state_grid
        self._forward = forward
        self._adjoint = adjoint
        self._affine = affine
        self.offset = state_grid.zeros() if offset is None else state_grid.check(offset)
        self.norm_estimate = norm_estimate
        self.norm_converged = norm_estimate is not None
        self.pde_solves_per_apply = pde_solves_per_apply
        self.label = label

    def apply_linear(self, u) -> np.ndarray:
        return self._forward(self.control_grid.check(u))

    def apply_adjoint(self, p) -> np.ndarray:
        return self._adjoint(self.state_grid.check(p))

    def apply_affine(self, u) -> np.ndarray:
        """The full state ``S u + offset``."""
        if self._affine is not None:
            return self._affine(self.control_grid.check(u))
        return self.apply_linear(u) + self.offset

    def __repr__(self):
        return f"SolutionOperator({self.label or 'anonymous'}, n={self.control_grid.size})"


def make_elliptic_operator(grid: Grid, problem: EllipticProblem = EllipticProblem(),
                           f: Optional[np.ndarray] = None) -> SolutionOperator:
    if grid.time_dependent:
        raise InvalidGridError("elliptic operator needs a stationary grid")
    mat = sp.csc_matrix(assemble_elliptic(grid, problem))
    if grid.size <= DIRECT_SOLVE_LIMIT:
        solve = spla.factorized(mat)
    else:
        def solve(b):
            return solve_spd(mat, b, method="cg")

    def forward(u):
        return solve(u) if np.any(u) else np.zeros_like(u)

    offset = forward(grid.check(f)) if f is not None else None
    return SolutionOperator(grid, grid, forward, forward, offset=offset,
                            label=f"elliptic(nu={problem.nu}, c={problem.c})")


class _StepSolver:
    """Repeated solves with ``I + tau * A`` (``A = -Lap``) on one time slice."""

    def __init__(self, grid: Grid, backend: str):
        self.grid = grid
        self.backend = backend
        tau = grid.tau
        space = grid.spatial()
        if backend == "sparse":
            mat = sp.csc_matrix(assemble_elliptic(space, EllipticProblem(nu=tau, c=1.0)))
            self._solve = spla.factorized(mat)
        elif backend == "spectral":
            k = np.arange(1, grid.n_cells)
            lam1 = 4.0 / grid.h**2 * np.sin(k * np.pi * grid.h / 2.0) ** 2
            lam = lam1 if grid.dim == 1 else lam1[:, None] + lam1[None, :]
            self.inv_symbol = 1.0 / (1.0 + tau * lam)
        else:
            raise InvalidParameterError(f"unknown parabolic backend {backend!r}")

    def to_modes(self, a):
        axes = tuple(range(1, self.grid.dim + 1))
        return fft.dstn(a, type=1, axes=axes, norm="ortho")

    def march(self, rhs: np.ndarray, y0: Optional[np.ndarray], reverse: bool) -> np.ndarray:
        """Run ``(I + tau A) z_n = z_prev + tau * rhs_n`` along the time axis."""
        g = self.grid
        rhs = rhs.reshape(g.shape)
        out = np.empty(g.shape)
        order = range(g.n_time_steps - 1, -1, -1) if reverse else range(g.n_time_steps)
        tau = g.tau
        if self.backend == "spectral":
            rhs_hat = self.to_modes(rhs)
            prev = np.zeros(g.space_shape) if y0 is None else self.to_modes(
                y0.reshape((1,) + g.space_shape))[0]
            for n in order:
                prev = (prev + tau * rhs_hat[n]) * self.inv_symbol
                out[n] = prev
            return self.to_modes(out).ravel()
        prev = np.zeros(g.space_size) if y0 is None else y0.ravel()
        for n in order:
            prev = self._solve(prev + tau * rhs[n].ravel())
            out[n] = prev.reshape(g.space_shape)
        return out.ravel()


def make_parabolic_operator(grid: Grid, f: Optional[np.ndarray] = None,
                            phi: Optional[np.ndarray] = None,
                            backend: str = "auto", observe: str = "left") -> SolutionOperator:
    """Backward-Euler heat operator ``y_t - Lap y = u + f``, ``y(0) = phi``.

    Controls (and ``f``) live on the right time levels ``t_1 .. t_N`` of
    ``grid``.  With ``observe="left"`` the state is reported on ``t_0 .. t_{N-1}``
    (its level-0 slot is ``phi``); the exact transpose is then the backward
    march ``(I - tau Lap) q_n = tau p_n + q_{n+1}`` with ``q_N = 0``.  With
    ``observe="right"`` the state is reported on ``t_1 .. t_N`` and the
    transpose starts from ``q_{N+1} = 0``.

    ``backend="spectral"`` diagonalizes the 5-point Laplacian with a type-I
    sine transform (exact for the uniform Dirichlet grid); ``"sparse"`` reuses
    one LU factorization per step.  ``"auto"`` uses spectral in 2D.
    """
    if not grid.time_dependent:
        raise InvalidGridError("parabolic operator needs n_time_steps >= 1")
    if grid.n_cells < 2:
        raise InvalidGridError("grid has no interior nodes (n_cells < 2)")
    if observe not in ("left", "right"):
        raise InvalidParameterError(f"observe must be 'left' or 'right', got {observe!r}")
    if backend == "auto":
        backend = "spectral" if grid.dim == 2 else "sparse"
    control_grid = grid.with_levels("right")
    state_grid = grid.with_levels(observe)
    stepper = _StepSolver(control_grid, backend)
    space = grid.spatial()
    shape = control_grid.shape
    left = observe == "left"

    def observe_levels(y, first):
        if not left:
            return y
        y = y.reshape(shape)
        out = np.empty(shape)
        out[0] = first
        out[1:] = y[:-1]
        return out.ravel()

    def forward(u):
        return observe_levels(stepper.march(u, None, reverse=False), 0.0)

    def adjoint(p):
        if left:
            p = p.reshape(shape)
            rhs = np.zeros(shape)
            rhs[:-1] = p[1:]
            p = rhs.ravel()
        return stepper.march(p, None, reverse=True)

    offset = None
    if f is not None or phi is not None:
        rhs = control_grid.zeros() if f is None else control_grid.check(f)
        y0 = None if phi is None else space.check(phi)
        first = 0.0 if y0 is None else y0.reshape(space.space_shape)
        offset = observe_levels(stepper.march(rhs, y0, reverse=False), first)
    return SolutionOperator(control_grid, state_grid, forward, adjoint, offset=offset,
                            label=f"parabolic({backend}, observe={observe})")


def estimate_operator_norm(op: SolutionOperator, tol: float = 1e-8, max_iter: int = 1000,
                           seed: int = 42) -> float:
    """Power iteration on ``S* S`` in the weighted inner products.

    Starts from the normalized all-ones vector with a small seeded perturbation.
    Stores the result in ``op.norm_estimate``; ``op.norm_converged`` is False
    when ``max_iter`` ran out first (the best estimate is still returned).
    """
    cg, sg = op.control_grid, op.state_grid
    rng = np.random.default_rng(seed)
    x = np.ones(cg.size) + 1e-3 * rng.standard_normal(cg.size)
    x /= cg.norm(x)
    est = 0.0
    converged = False
    for _ in range(max_iter):
        sx = op.apply_linear(x)
        new = sg.norm(sx) ** 2
        if new == 0.0:
            est, converged = 0.0, True
            break
        if est > 0 and abs(new - est) <= tol * new:
            est, converged = new, True
            break
        est = new
        x = op.apply_adjoint(sx)
        x /= cg.norm(x)
    if not converged:
        logger.warning("power iteration hit max_iter=%d; norm estimate is stale", max_iter)
    op.norm_estimate = float(np.sqrt(est))
    op.norm_converged = converged
    return op.norm_estimate


def inner(grid: Grid, a, b) -> float:
    return grid.inner(a, b)


def norm(grid: Grid, a) -> float:
    return grid.norm(a)
