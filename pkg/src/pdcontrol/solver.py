"""Primal-dual iteration for ``min 1/2|Su + y_f - y_d|^2 + alpha/2|u|^2 + theta(u)``.

One iteration needs one adjoint solve (``S* p^k``) and one state solve at the
extrapolated control ``2 u^{k+1} - u^k``.  Step sizes follow the classic rule
``r s < 1/|S|^2``, the enlarged rule ``r s < (4 + 2 alpha r) / (3 |S|^2)``, or
the adaptive APD recurrence.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidOperatorError, InvalidParameterError
from .pde import SolutionOperator
from .prox import BoxIndicator, L1Box

logger = logging.getLogger(__name__)

RULES = ("classic", "enlarged", "apd")


class StepSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StepRule:
    kind: str
    r0: float
    s0: float
    adjust_every: int = 1

    def __post_init__(self):
        if self.kind not in RULES:
            raise InvalidParameterError(f"unknown step rule {self.kind!r}")
        if not (self.r0 > 0 and self.s0 > 0):
            raise InvalidParameterError("step sizes must be positive")
        if self.adjust_every < 1:
            raise InvalidParameterError("adjust_every must be >= 1")


@dataclass
class ExactSolution:
    u: np.ndarray
    y: np.ndarray
    lam: Optional[np.ndarray] = None


@dataclass
class ProblemInstance:
    op: SolutionOperator
    y_d: np.ndarray
    alpha: float
    reg: BoxIndicator | L1Box
    exact: Optional[ExactSolution] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        self.y_d = self.op.state_grid.check(self.y_d)

    @property
    def shifted_target(self) -> np.ndarray:
        """``y_d - y_f``: the target seen by the linear part of the operator."""
        return self.y_d - self.op.offset

    def multiplier(self) -> np.ndarray:
        """``lambda* = y* - y_d`` from the exact solution."""
        ex = self.exact
        if ex.lam is not None:
            return ex.lam
        return ex.y - self.y_d

    def objective(self, u, y) -> float:
        sg, cg = self.op.state_grid, self.op.control_grid
        return (0.5 * sg.norm(y - self.y_d) ** 2 + 0.5 * self.alpha * cg.norm(u) ** 2
                + self.reg.penalty(u, cg))


@dataclass
class PDState:
    u: np.ndarray
    p: np.ndarray
    r: float
    s: float
    k: int = 0
    last_stop_measure: float = math.inf
    pde_solves: int = 0
    su: Optional[np.ndarray] = None  # S u^k (linear part), tracked for free by linearity


@dataclass
class LogRow:
    k: int
    stop_measure: float
    objective: float
    energy: Optional[float] = None
    kkt: Optional[float] = None


@dataclass
class SolveReport:
    iterations: int
    pde_solves: int
    objective: float
    converged: bool
    u: np.ndarray
    y: np.ndarray
    p: np.ndarray
    wall_time: float
    rule: str
    r: float
    s: float
    step_warning: bool = False
    err_u: Optional[float] = None
    err_y: Optional[float] = None
    err_u_rel: Optional[float] = None
    err_y_rel: Optional[float] = None
    log: list[LogRow] = field(default_factory=list)


def step_size_bound(kind: str, r: float, alpha: float, norm_s: float) -> float:
    """Supremum of admissible ``r * s`` for the given rule."""
    if not norm_s > 0:
        raise InvalidOperatorError("operator norm must be positive")
    if not r > 0 or alpha < 0:
        raise InvalidParameterError("need r > 0 and alpha >= 0")
    classic = (1.0 / norm_s) ** 2  # rounds better than 1 / norm_s**2 (e.g. 0.05 -> 400)
    if kind in ("classic", "apd"):
        return classic
    if kind == "enlarged":
        return (4.0 + 2.0 * alpha * r) / 3.0 * classic
    raise InvalidParameterError(f"unknown step rule {kind!r}")


def validate_step_sizes(r: float, s: float, kind: str, alpha: float, norm_s: float) -> bool:
    """True iff ``r * s`` is strictly below the rule's bound.

    Products within 0.1% of the bound on either side (the printed reference
    parameters sit exactly on it, up to rounding) raise a
    :class:`StepSizeWarning` since the norm itself is an estimate.
    """
    bound = step_size_bound(kind, r, alpha, norm_s)
    rs = r * s
    if 0.999 * bound <= rs <= 1.001 * bound:
        warnings.warn(f"r*s = {rs:g} sits on the {kind} bound {bound:g}", StepSizeWarning,
                      stacklevel=2)
    return rs < bound


def apd_update(r_k: float, s_k: float) -> tuple[float, float, float]:
    """One step of the APD recurrence; returns ``(r_next, s_next, tau_k)``."""
    if not s_k > 0:
        raise InvalidParameterError("s_k must be positive")
    tau = 1.0 / math.sqrt(1.0 + s_k)
    return r_k / tau, s_k * tau, tau


def stop_measure(u_k, u_next, p_k, p_next, control_grid, state_grid) -> float:
    du = control_grid.norm(u_next - u_k) / max(1.0, control_grid.norm(u_k))
    dp = state_grid.norm(p_next - p_k) / max(1.0, state_grid.norm(p_k))
    return max(du, dp)


def check_stop(u_k, u_next, p_k, p_next, tol: float, control_grid, state_grid) -> bool:
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    return stop_measure(u_k, u_next, p_k, p_next, control_grid, state_grid) <= tol


def initial_state(prob: ProblemInstance, rule: StepRule) -> PDState:
    op = prob.op
    return PDState(u=op.control_grid.zeros(), p=op.state_grid.zeros(), r=rule.r0, s=rule.s0,
                   su=op.state_grid.zeros())


def pd_step(state: PDState, prob: ProblemInstance) -> PDState:
    """One primal-dual iteration; returns a new state (the input is untouched)."""
    op = prob.op
    r, s = state.r, state.s
    sstar_p = op.apply_adjoint(state.p)
    u_next = prob.reg.prox(state.u, sstar_p, r, prob.alpha)
    u_bar = 2.0 * u_next - state.u
    y_bar = op.apply_affine(u_bar)
    p_next = (y_bar + state.p / s - prob.y_d) / (1.0 + 1.0 / s)
    su_next = None
    if state.su is not None:
        su_next = 0.5 * (y_bar - op.offset + state.su)
    measure = stop_measure(state.u, u_next, state.p, p_next, op.control_grid, op.state_grid)
    return PDState(u=u_next, p=p_next, r=r, s=s, k=state.k + 1, last_stop_measure=measure,
                   pde_solves=state.pde_solves + 2 * op.pde_solves_per_apply, su=su_next)


def kkt_residual(u, prob: ProblemInstance) -> float:
    """Fixed-point residual ``|u - prox_{g, r=1}(u - grad f(u))|``.

    Zero exactly at the minimizer of the reduced problem.
    """
    op = prob.op
    grad = op.apply_adjoint(op.apply_affine(u) - prob.y_d)
    return op.control_grid.norm(u - prob.reg.prox(u, grad, 1.0, prob.alpha))


def relative_error(a, ref, grid) -> tuple[float, float]:
    """Absolute and relative weighted L2 error of ``a`` against ``ref``."""
    err = grid.norm(a - ref)
    den = grid.norm(ref)
    return err, (err / den if den > 0 else math.inf)


def solve(prob: ProblemInstance, rule: StepRule, tol: float = 1e-5, max_iter: int = 1000,
          log_every: int = 1, monitor_energy: bool = False, track_kkt: bool = False,
          norm_s: Optional[float] = None) -> SolveReport:
    """Iterate :func:`pd_step` from ``(u, p) = (0, 0)`` until the stop test holds.

    Hitting ``max_iter`` flags the report as not converged.  ``monitor_energy``
    evaluates the Lyapunov energy (needs ``prob.exact``) from the tracked
    ``S u`` at no extra PDE cost.  The final state ``y = S u + y_f`` takes one
    more solve, not counted in ``pde_solves``.
    """
    op = prob.op
    start = time.perf_counter()
    norm_s = norm_s if norm_s is not None else op.norm_estimate
    step_warning = False
    if norm_s:
        kind = "classic" if rule.kind == "apd" else rule.kind
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ok = validate_step_sizes(rule.r0, rule.s0, kind, prob.alpha, norm_s)
        if not ok or caught:
            step_warning = True
            logger.warning("step sizes r=%g, s=%g violate or touch the %s bound (|S|~%.4g)",
                           rule.r0, rule.s0, kind, norm_s)
    energy_fn = None
    if monitor_energy:
        from .admm import energy_from_pd  # local import: admm depends on this module
        energy_fn = energy_from_pd

    state = initial_state(prob, rule)
    log: list[LogRow] = []
    converged = False
    while state.k < max_iter:
        prev = state
        state = pd_step(state, prob)
        if rule.kind == "apd" and prev.k % rule.adjust_every == 0:
            r, s, _ = apd_update(state.r, state.s)
            state.r, state.s = r, s
        if log_every and (state.k % log_every == 0 or state.last_stop_measure <= tol):
            y_lin = state.su + op.offset
            row = LogRow(state.k, state.last_stop_measure, prob.objective(state.u, y_lin))
            if energy_fn is not None:
                row.energy = energy_fn(prev, state, prob)
            if track_kkt:
                row.kkt = kkt_residual(state.u, prob)
            log.append(row)
        if state.last_stop_measure <= tol:
            converged = True
            break
    if not converged:
        logger.warning("primal-dual hit max_iter=%d (last measure %.3e)", max_iter,
                       state.last_stop_measure)
    y = op.apply_affine(state.u)
    report = SolveReport(iterations=state.k, pde_solves=state.pde_solves,
                         objective=prob.objective(state.u, y), converged=converged,
                         u=state.u, y=y, p=state.p, wall_time=time.perf_counter() - start,
                         rule=rule.kind, r=rule.r0, s=rule.s0, step_warning=step_warning,
                         log=log)
    if prob.exact is not None:
        report.err_u, report.err_u_rel = relative_error(state.u, prob.exact.u, op.control_grid)
        report.err_y, report.err_y_rel = relative_error(y, prob.exact.y, op.state_grid)
    return report
