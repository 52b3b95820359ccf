"""Trained operator nets wrapped as solution operators for the primal-dual solver.

The state map is ``u -> N(u + f)`` and the adjoint is ``p -> N(p)`` (the
elliptic problems here are self-adjoint).  For parabolic problems every
backward-Euler step ``(I - tau Lap) y_n = tau (u_n + f_n) + y_{n-1}`` is one
net call, marched forward for the state and backward for the adjoint.

By default a net is evaluated scale-equivariantly, ``N(v) := c * net(v / c)``
with ``c = |v| / ref``, where ``ref`` is the typical norm of the training
inputs.  The exact solution operator is linear, so this is consistent with
the target map and keeps every net call on the training distribution.
``input_scaling="none"`` gives the plain ``net(v)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, InvalidParameterError, ShapeError
from ..grid import Grid
from ..pde import SolutionOperator, estimate_operator_norm
from .grf import sample_grf
from .net import OperatorNet, predict
from .training import pad_boundary

logger = logging.getLogger(__name__)

FIDELITY_THRESHOLD = 5e-2
SCALINGS = ("norm", "none")


class NetEvaluator:
    """Maps interior nodal values to interior nodal values through ``net``."""

    def __init__(self, net: OperatorNet, n_cells: int, input_scaling: str = "norm"):
        if input_scaling not in SCALINGS:
            raise InvalidParameterError(f"input_scaling must be one of {SCALINGS}")
        if net.sensors.shape[0] != n_cells + 1:
            raise ShapeError(f"net has {net.sensors.shape[0]} sensors, grid has {n_cells + 1} nodes")
        if not np.allclose(net.sensors, np.linspace(0.0, 1.0, n_cells + 1)):
            raise ShapeError("net sensors are not the grid nodes")
        self.net = net
        self.scaling = input_scaling
        self.ref = float(net.meta.get("input_ref_norm") or 1.0)
        # trunk features at the fixed nodes never change
        z = net.sensors[:, None]
        self._trunk = net.trunk.forward(z)[1:-1]
        self._weight = net.boundary_weight(z)[1:-1]

    def _raw(self, v: np.ndarray) -> np.ndarray:
        b = self.net.branch.forward(pad_boundary(v))
        return (b @ self._trunk.T + self.net.b0[0]) * self._weight

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.scaling == "none":
            return self._raw(v)
        c = np.linalg.norm(v, axis=-1, keepdims=True) / self.ref
        safe = np.where(c > 0, c, 1.0)
        return np.where(c > 0, safe * self._raw(v / safe), 0.0)


@dataclass
class FidelityReport:
    mean_rel_error: float
    max_rel_error: float
    n_draws: int
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def fidelity_gate(net: OperatorNet, reference: SolutionOperator, n_draws: int = 100,
                  seed: int = 2024, threshold: float = FIDELITY_THRESHOLD,
                  input_scaling: str = "norm") -> FidelityReport:
    """Held-out relative L2 error of the net against ``reference`` on fresh random fields."""
    grid = reference.control_grid
    if grid.dim != 1 or grid.time_dependent:
        raise ShapeError("fidelity gate needs a 1D stationary reference operator")
    ev = NetEvaluator(net, grid.n_cells, input_scaling)
    inputs = sample_grf(seed, grid.n_cells + 1, n_draws)[:, 1:-1]
    pred = ev(inputs)
    errs = []
    for u, y_net in zip(inputs, pred):
        y = reference.apply_linear(u)
        errs.append(np.linalg.norm(y_net - y) / np.linalg.norm(y))
    errs = np.asarray(errs)
    mean = float(errs.mean())
    return FidelityReport(mean, float(errs.max()), n_draws, threshold, mean <= threshold)


def _enforce_gate(net, reference, input_scaling, gate):
    if reference is None:
        if gate:
            raise ConfigurationError("the fidelity gate needs the exact reference operator")
        return None
    if not gate:
        return None
    report = fidelity_gate(net, reference, input_scaling=input_scaling)
    if not report.passed:
        raise ConfigurationError(
            f"surrogate failed the fidelity gate: mean relative error "
            f"{report.mean_rel_error:.3e} > {report.threshold:.1e}")
    return report


def as_solution_operator(net: OperatorNet, grid: Grid, f=None,
                         reference: Optional[SolutionOperator] = None, gate: bool = True,
                         input_scaling: str = "norm") -> SolutionOperator:
    """Surrogate ``u -> N(u + f)`` with adjoint ``p -> N(p)`` on a 1D elliptic grid.

    ``reference`` is the exact operator the net stands in for: it runs the
    fidelity gate (unless ``gate=False``) and provides the norm estimate.
    The reported ``offset`` is ``N(f)``; since ``N`` is only approximately
    linear, the solver uses the affine callable for the state itself.
    """
    if grid.dim != 1 or grid.time_dependent:
        raise ShapeError("elliptic surrogate needs a 1D stationary grid")
    ev = NetEvaluator(net, grid.n_cells, input_scaling)
    report = _enforce_gate(net, reference, input_scaling, gate)
    f = grid.zeros() if f is None else grid.check(f)

    op = SolutionOperator(grid, grid, ev, ev, offset=ev(f), pde_solves_per_apply=0,
                          affine=lambda u: ev(u + f), label="deeponet(elliptic)")
    op.fidelity = report
    if reference is not None:
        op.norm_estimate = reference.norm_estimate or estimate_operator_norm(reference)
    return op


def _check_tau(net: OperatorNet, tau: float):
    nu, c = net.meta.get("nu"), net.meta.get("c")
    if nu is None:
        logger.warning("net carries no training coefficients; cannot verify tau=%g", tau)
        return
    if not (np.isclose(nu, tau, rtol=1e-9, atol=0.0) and np.isclose(c, 1.0)):
        raise ConfigurationError(f"net was trained for -{nu:g} y'' + {c:g} y, "
                                 f"not for the step size tau={tau:g}")


def surrogate_parabolic_march(net: OperatorNet, u, f, tau: float, N: int, phi=None,
                              reverse: bool = False, input_scaling: str = "norm",
                              _evaluator: Optional[NetEvaluator] = None) -> np.ndarray:
    """March ``z_n = N(tau * (u_n + f_n) + z_prev)`` over ``N`` steps.

    ``u``/``f`` hold ``N`` time slices of interior values.  Forward marching
    starts from ``phi`` (default 0) and returns ``z_1 .. z_N``; ``reverse``
    runs ``n = N .. 1`` from a zero terminal value (the adjoint direction).
    """
    _check_tau(net, tau)
    u = np.asarray(u, dtype=float).reshape(N, -1)
    n_nodes = u.shape[1]
    ev = _evaluator or NetEvaluator(net, n_nodes + 1, input_scaling)
    rhs = tau * (u if f is None else u + np.asarray(f, dtype=float).reshape(N, -1))
    prev = np.zeros(n_nodes) if phi is None or reverse else np.asarray(phi, dtype=float).ravel()
    out = np.empty_like(rhs)
    for n in (range(N - 1, -1, -1) if reverse else range(N)):
        prev = ev(rhs[n] + prev)
        out[n] = prev
    return out


def surrogate_parabolic_operator(net: OperatorNet, grid: Grid, f=None, phi=None,
                                 reference: Optional[SolutionOperator] = None,
                                 step_reference: Optional[SolutionOperator] = None,
                                 gate: bool = True, input_scaling: str = "norm",
                                 observe: str = "left") -> SolutionOperator:
    """Time-stepped surrogate with the level conventions of the exact heat operator.

    One net serves both directions since the per-step elliptic operators of
    the state and the adjoint coincide.  ``step_reference`` is the exact
    per-step solver used by the fidelity gate; ``reference`` the exact
    parabolic operator that supplies the norm estimate.
    """
    if grid.dim != 1 or not grid.time_dependent:
        raise ShapeError("parabolic surrogate needs a 1D space-time grid")
    if observe not in ("left", "right"):
        raise InvalidParameterError(f"observe must be 'left' or 'right', got {observe!r}")
    _check_tau(net, grid.tau)
    ev = NetEvaluator(net, grid.n_cells, input_scaling)
    report = _enforce_gate(net, step_reference, input_scaling, gate)
    control_grid = grid.with_levels("right")
    state_grid = grid.with_levels(observe)
    N, tau = grid.n_time_steps, grid.tau
    shape = control_grid.shape
    f = None if f is None else control_grid.check(f)
    phi_v = None if phi is None else grid.spatial().check(phi)
    left = observe == "left"

    def state(u, f_, y0):
        y = surrogate_parabolic_march(net, u, f_, tau, N, phi=y0, _evaluator=ev)
        if not left:
            return y.ravel()
        out = np.empty(shape)
        out[0] = 0.0 if y0 is None else y0
        out[1:] = y[:-1]
        return out.ravel()

    def adjoint(p):
        p = p.reshape(shape)
        if left:
            rhs = np.zeros(shape)
            rhs[:-1] = p[1:]
            p = rhs
        return surrogate_parabolic_march(net, p, None, tau, N, reverse=True, _evaluator=ev).ravel()

    op = SolutionOperator(control_grid, state_grid, lambda u: state(u, None, None), adjoint,
                          offset=state(control_grid.zeros(), f, phi_v), pde_solves_per_apply=0,
                          affine=lambda u: state(u, f, phi_v),
                          label=f"deeponet(parabolic, tau={tau:g})")
    op.fidelity = report
    if reference is not None:
        op.norm_estimate = reference.norm_estimate or estimate_operator_norm(reference)
    return op
