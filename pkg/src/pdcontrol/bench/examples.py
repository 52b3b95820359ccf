"""Manufactured test problems with known solutions.

1. Heat equation on (0,1)^2 x (0,1) with box constraints.
2. Sparse (L1 + box) Poisson control on (0,1)^2, no closed-form solution.
3. 1D elliptic ``-y'' + y = u + f`` with box constraints, family in ``(k_s, k_a)``.
4. 1D heat equation with box constraints, family in ``(k_s, k_a)``.

Examples 3 and 4 can run on a trained operator net (method ``PD-ONet``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Union

import numpy as np

from ..errors import ConfigurationError
from ..grid import Grid
from ..neural.io import load_net
from ..neural.net import OperatorNet
from ..neural.surrogate import as_solution_operator, surrogate_parabolic_operator
from ..pde import (EllipticProblem, estimate_operator_norm, make_elliptic_operator,
                   make_parabolic_operator)
from ..prox import BoxIndicator, L1Box
from ..solver import ExactSolution, ProblemInstance, StepRule

PI = np.pi
METHOD_RE = re.compile(r"^(PD-C|PD-I|PD-ONet|APD\(?(\d+)\)?)$")

# per example: alpha, a, b, n_cells, time steps (None = same as n_cells, 0 = stationary)
EXAMPLE_DEFAULTS = {
    1: dict(alpha=1e-3, a=-0.5, b=0.5, n_cells=64, n_time_steps=None),
    2: dict(alpha=1e-3, a=-30.0, b=30.0, n_cells=64, n_time_steps=0, mu=0.0),
    3: dict(alpha=1e-3, a=-0.5, b=0.5, n_cells=64, n_time_steps=0, k_s=0.2, k_a=1.0, nu=1.0),
    4: dict(alpha=1e-3, a=-100.0, b=100.0, n_cells=64, n_time_steps=None, k_s=0.3, k_a=500.0),
}


@dataclass
class ExampleSpec:
    example: int
    method: str = "PD-I"
    alpha: Optional[float] = None
    mu: float = 0.0
    a: Optional[float] = None
    b: Optional[float] = None
    k_s: Optional[float] = None
    k_a: Optional[float] = None
    nu: float = 1.0
    n_cells: Optional[int] = None
    n_time_steps: Optional[int] = None
    tol: float = 1e-5
    max_iter: int = 1000
    seed: int = 0
    r: Optional[float] = None
    s: Optional[float] = None
    model: Union[str, OperatorNet, None] = None
    backend: str = "auto"
    gate: bool = True
    input_scaling: str = "norm"
    estimate_norm: bool = True
    name: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.example not in EXAMPLE_DEFAULTS:
            raise ConfigurationError(f"unknown example {self.example!r} (expected 1..4)")
        m = METHOD_RE.match(str(self.method))
        if not m:
            raise ConfigurationError(f"unknown method {self.method!r}")
        for key, value in EXAMPLE_DEFAULTS[self.example].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.n_time_steps is None:
            self.n_time_steps = self.n_cells
        if self.method == "PD-ONet":
            if self.example not in (3, 4):
                raise ConfigurationError("PD-ONet is only defined for examples 3 and 4")
            if self.model is None:
                raise ConfigurationError("PD-ONet needs a trained model")
        if not self.alpha > 0 or self.mu < 0 or not self.a < self.b or self.n_cells < 2:
            raise ConfigurationError(f"invalid parameters in {self!r}")
        if self.example == 2 and not self.a < 0 < self.b:
            raise ConfigurationError("example 2 needs a < 0 < b")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigurationError("tol must be positive and max_iter >= 1")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def tau(self) -> Optional[float]:
        return 1.0 / self.n_time_steps if self.n_time_steps else None

    def with_(self, **kw) -> "ExampleSpec":
        return replace(self, **kw)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def step_rule(spec: ExampleSpec) -> StepRule:
    """Step sizes of the reference experiments, unless ``spec.r``/``spec.s`` override."""
    method = spec.method
    m = METHOD_RE.match(method)
    if spec.example in (3, 4):
        r, s = (2e3, 0.4) if spec.example == 3 else (8e2, 0.4)
        table = {"PD-C": (r, s), "PD-I": (r, s), "APD": (r, s), "PD-ONet": (r, s)}
    elif spec.alpha >= 1e-4:
        table = {"PD-C": (4e3, 0.1), "PD-I": (4e3, 0.4), "APD": (1e3, 0.4)}
    else:
        table = {"PD-C": (4e3, 0.1), "PD-I": (5.6e3, 0.1), "APD": (4e3, 0.1)}
    key = "APD" if m.group(2) else method
    r0, s0 = table[key]
    r0 = spec.r if spec.r is not None else r0
    s0 = spec.s if spec.s is not None else s0
    if m.group(2):
        return StepRule("apd", r0, s0, adjust_every=int(m.group(2)))
    return StepRule("enlarged" if method == "PD-I" else "classic", r0, s0)


def _model(spec: ExampleSpec) -> OperatorNet:
    net = spec.model if isinstance(spec.model, OperatorNet) else load_net(spec.model)
    if net.sensors.shape[0] != spec.n_cells + 1:
        raise ConfigurationError(f"model has {net.sensors.shape[0]} sensors but the mesh has "
                                 f"{spec.n_cells + 1} nodes")
    return net


def _example1(spec: ExampleSpec) -> ProblemInstance:
    alpha = spec.alpha
    a, b = spec.a, spec.b
    grid = Grid(2, spec.n_cells, spec.n_time_steps)
    state_grid = grid.with_levels("left")

    def s1(x1, x2):
        return np.sin(PI * x1) * np.sin(PI * x2)

    def s2(x1, x2):
        return np.sin(2 * PI * x1) * np.sin(2 * PI * x2)

    def u_exact(x1, x2, t):
        # -q/alpha clamped to [a, b] with q = alpha (1 - t) s2
        return np.clip(-(1 - t) * s2(x1, x2), a, b)

    y = state_grid.sample(lambda x1, x2, t: (1 - t) * s1(x1, x2))
    u = grid.sample(u_exact)
    f = grid.sample(lambda x1, x2, t: -u_exact(x1, x2, t) - s1(x1, x2)
                    + 2 * PI**2 * (1 - t) * s1(x1, x2))
    y_d = state_grid.sample(lambda x1, x2, t: (1 - t) * s1(x1, x2) - alpha * s2(x1, x2)
                            - 8 * PI**2 * alpha * (1 - t) * s2(x1, x2))
    phi = grid.spatial().sample(s1)
    op = make_parabolic_operator(grid, f=f, phi=phi, backend=spec.backend)
    return ProblemInstance(op, y_d, alpha, BoxIndicator(a, b), ExactSolution(u, y))


def _example2(spec: ExampleSpec) -> ProblemInstance:
    grid = Grid(2, spec.n_cells)
    y_d = grid.sample(lambda x1, x2: np.exp(2 * x1) * np.sin(2 * PI * x1) * np.sin(2 * PI * x2) / 6)
    op = make_elliptic_operator(grid)
    return ProblemInstance(op, y_d, spec.alpha, L1Box(spec.mu, spec.a, spec.b))


def _example3(spec: ExampleSpec) -> ProblemInstance:
    alpha, ks, ka, nu = spec.alpha, spec.k_s, spec.k_a, spec.nu
    grid = Grid(1, spec.n_cells)
    x = grid.axis
    y = ks * np.sin(PI * x)
    q = alpha * ka * np.sin(2 * PI * x)
    u = np.clip(-q / alpha, spec.a, spec.b)
    f = -u + ks * (nu * PI**2 + 1) * np.sin(PI * x)
    y_d = y - (nu * 4 * PI**2 + 1) * q
    problem = EllipticProblem(nu=nu, c=1.0)
    exact_op = make_elliptic_operator(grid, problem, f=f)
    if spec.method == "PD-ONet":
        net = _model(spec)
        _check_coeffs(net, nu)
        op = as_solution_operator(net, grid, f=f, reference=exact_op, gate=spec.gate,
                                  input_scaling=spec.input_scaling)
    else:
        op = exact_op
    return ProblemInstance(op, y_d, alpha, BoxIndicator(spec.a, spec.b), ExactSolution(u, y))


def _check_coeffs(net: OperatorNet, nu: float):
    if "nu" in net.meta and not (np.isclose(net.meta["nu"], nu) and np.isclose(net.meta["c"], 1.0)):
        raise ConfigurationError(f"model trained for nu={net.meta['nu']}, c={net.meta['c']}; "
                                 f"example needs nu={nu}, c=1")


def _example4(spec: ExampleSpec) -> ProblemInstance:
    alpha, ks, ka = spec.alpha, spec.k_s, spec.k_a
    grid = Grid(1, spec.n_cells, spec.n_time_steps)
    state_grid = grid.with_levels("left")
    sx, s2x = (lambda x: np.sin(PI * x)), (lambda x: np.sin(2 * PI * x))

    def u_exact(x, t):
        return np.clip(-ka * (1 - t) * s2x(x), spec.a, spec.b)

    u = grid.sample(u_exact)
    f = grid.sample(lambda x, t: -u_exact(x, t) + ks * np.exp(t) * sx(x)
                    + ks * (np.exp(t) - 1) * PI**2 * sx(x))
    y = state_grid.sample(lambda x, t: ks * (np.exp(t) - 1) * sx(x))
    y_d = state_grid.sample(lambda x, t: ks * (np.exp(t) - 1) * sx(x) - alpha * ka * s2x(x)
                            - 4 * PI**2 * alpha * ka * (1 - t) * s2x(x))
    exact_op = make_parabolic_operator(grid, f=f, backend=spec.backend)
    if spec.method == "PD-ONet":
        net = _model(spec)
        step_ref = make_elliptic_operator(grid.spatial(), EllipticProblem(nu=grid.tau, c=1.0))
        if spec.estimate_norm:
            estimate_operator_norm(exact_op)
        op = surrogate_parabolic_operator(net, grid, f=f, reference=exact_op,
                                          step_reference=step_ref, gate=spec.gate,
                                          input_scaling=spec.input_scaling)
    else:
        op = exact_op
    return ProblemInstance(op, y_d, alpha, BoxIndicator(spec.a, spec.b), ExactSolution(u, y))


BUILDERS = {1: _example1, 2: _example2, 3: _example3, 4: _example4}


def build_example(spec: ExampleSpec) -> ProblemInstance:
    """Assemble the problem described by ``spec`` (operator, data, regularizer, exact solution)."""
    prob = BUILDERS[spec.example](spec)
    if spec.estimate_norm and prob.op.norm_estimate is None:
        estimate_operator_norm(prob.op)
    return prob
