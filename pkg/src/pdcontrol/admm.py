"""Linearized ADMM twin of the primal-dual iteration and its Lyapunov energy.

With ``d = y_d - y_f`` the ADMM sweeps are

    y^{k+1}   = (d + s S u^k + lam^k) / (1 + s)
    u^{k+1}   = prox_g(u^k; S* p~^k),   p~^k = lam^k + s (S u^k - y^{k+1})
    lam^{k+1} = lam^k + s (S u^{k+1} - y^{k+1})

Starting from ``u^0 = 0`` and ``lam^0 = s d`` gives ``p~^0 = 0``, and the
``u`` iterates then coincide with the primal-dual ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DiagnosticUnavailable
from .solver import PDState, ProblemInstance


@dataclass
class ADMMState:
    u: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    su: np.ndarray
    k: int = 0
    p: Optional[np.ndarray] = None  # p~^{k-1}, the PD-equivalent dual of the last sweep


def admm_initial_state(prob: ProblemInstance, s: float) -> ADMMState:
    """Zero control with ``lam^0`` aligned so the first derived dual vanishes."""
    op = prob.op
    return ADMMState(u=op.control_grid.zeros(), y=op.state_grid.zeros(),
                     lam=s * prob.shifted_target, su=op.state_grid.zeros())


def linearized_admm_step(state: ADMMState, prob: ProblemInstance, r: float, s: float) -> ADMMState:
    op = prob.op
    d = prob.shifted_target
    y_next = (d + s * state.su + state.lam) / (1.0 + s)
    p_tilde = state.lam + s * (state.su - y_next)
    u_next = prob.reg.prox(state.u, op.apply_adjoint(p_tilde), r, prob.alpha)
    su_next = op.apply_linear(u_next)
    lam_next = state.lam + s * (su_next - y_next)
    return ADMMState(u=u_next, y=y_next, lam=lam_next, su=su_next, k=state.k + 1, p=p_tilde)


def _sigma(alpha, r, s):
    return (2.0 + 4.0 * alpha * r) / (2.0 + alpha * r) * s


def _energy(u, u_prev, lam, su, su_prev, prob: ProblemInstance, r: float, s: float) -> float:
    if prob.exact is None:
        raise DiagnosticUnavailable("Lyapunov energy needs the exact solution (u*, lambda*)")
    cg, sg = prob.op.control_grid, prob.op.state_grid
    alpha = prob.alpha
    du = u - u_prev
    sdu = su - su_prev
    du2, sdu2 = cg.norm(du) ** 2, sg.norm(sdu) ** 2
    d_norm2 = du2 / r - 3.0 * s / (4.0 + 2.0 * alpha * r) * sdu2
    return ((1.0 / r + alpha) * cg.norm(u - prob.exact.u) ** 2
            + sg.norm(lam - prob.multiplier()) ** 2 / s
            + 0.5 * d_norm2 + _sigma(alpha, r, s) / 8.0 * sdu2)


def lyapunov_energy(state: ADMMState, prev_u, prob: ProblemInstance, r: float, s: float,
                    prev_su=None) -> float:
    """``E_k`` for the ADMM state ``k`` given ``u^{k-1}``.

    ``|v|_D^2`` is evaluated as ``|v|^2 / r - 3 s / (4 + 2 alpha r) |S v|^2``;
    passing ``prev_su = S u^{k-1}`` avoids the extra PDE solve.
    """
    if prev_su is None:
        prev_su = prob.op.apply_linear(prev_u)
    return _energy(state.u, prev_u, state.lam, state.su, prev_su, prob, r, s)


def energy_from_pd(prev: PDState, state: PDState, prob: ProblemInstance) -> float:
    """``E_{k+1}`` from two consecutive primal-dual states.

    Uses ``lam^{k+1} = p^k + s S (u^{k+1} - u^k)``; needs tracked ``S u``.
    """
    s = prev.s
    lam = prev.p + s * (state.su - prev.su)
    return _energy(state.u, prev.u, lam, state.su, prev.su, prob, prev.r, s)


def energy_descent_delta(energies, u_steps, lam_steps, slack: float = 1e-10) -> float:
    """Largest ``delta`` with ``E_{k+1} <= E_k - delta * (|du|^2 + |dlam|^2) + slack``.

    ``energies[i]`` pairs with the step norms ``u_steps[i]``/``lam_steps[i]``
    taken between energies ``i`` and ``i + 1``.  Returns ``inf`` when every
    step is zero, and a negative value if descent fails somewhere.
    """
    e = np.asarray(energies, dtype=float)
    v = np.asarray(u_steps, dtype=float) ** 2 + np.asarray(lam_steps, dtype=float) ** 2
    drop = e[:-1] - e[1:] + slack
    v = v[: drop.size]
    mask = v > 0
    if not mask.any():
        return float("inf") if np.all(drop >= 0) else -float("inf")
    if np.any(drop[~mask] < 0):
        return -float("inf")
    return float(np.min(drop[mask] / v[mask]))


def energy_trace(prob: ProblemInstance, r: float, s: float, n_iter: int):
    """Run ``n_iter`` ADMM sweeps from the aligned start and record the energy.

    Returns ``(energies, u_steps, lam_steps)`` where ``energies[k]`` is
    ``E_{k+1}`` and the step norms are ``|u^{k+1} - u^k|``, ``|lam^{k+1} - lam^k|``.
    """
    cg, sg = prob.op.control_grid, prob.op.state_grid
    state = admm_initial_state(prob, s)
    energies, u_steps, lam_steps = [], [], []
    for _ in range(n_iter):
        nxt = linearized_admm_step(state, prob, r, s)
        energies.append(_energy(nxt.u, state.u, nxt.lam, nxt.su, state.su, prob, r, s))
        u_steps.append(cg.norm(nxt.u - state.u))
        lam_steps.append(sg.norm(nxt.lam - state.lam))
        state = nxt
    return np.array(energies), np.array(u_steps), np.array(lam_steps)
