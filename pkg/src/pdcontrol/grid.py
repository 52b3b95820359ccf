"""Uniform space(-time) grids on the unit interval/square.

Fields are flat ``numpy`` arrays over the interior nodes.  Time-dependent
fields are time-major, then row-major in space with the last spatial axis
varying fastest.  Time levels are ``t_1 .. t_N`` (``time_levels="right"``,
controls) or ``t_0 .. t_{N-1}`` (``"left"``, observed states).  Homogeneous
Dirichlet boundary values are implicit and never stored.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidGridError, ShapeError


@dataclass(frozen=True)
class Grid:
    dim: int
    n_cells: int
    n_time_steps: int = 0
    T: float = 1.0
    time_levels: str = "right"

    def __post_init__(self):
        if self.time_levels not in ("right", "left"):
            raise InvalidGridError(f"time_levels must be 'right' or 'left', got {self.time_levels!r}")
        if self.dim not in (1, 2):
            raise InvalidGridError(f"dim must be 1 or 2, got {self.dim}")
        if self.n_cells < 1:
            raise InvalidGridError("n_cells must be positive")
        if self.n_time_steps < 0:
            raise InvalidGridError("n_time_steps must be nonnegative")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def tau(self) -> float:
        return self.T / self.n_time_steps if self.n_time_steps else 0.0

    @property
    def time_dependent(self) -> bool:
        return self.n_time_steps > 0

    @property
    def n_interior(self) -> int:
        """Interior nodes per spatial axis."""
        return self.n_cells - 1

    @property
    def space_shape(self) -> tuple[int, ...]:
        return (self.n_interior,) * self.dim

    @property
    def space_size(self) -> int:
        return self.n_interior**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        if self.time_dependent:
            return (self.n_time_steps,) + self.space_shape
        return self.space_shape

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def weight(self) -> float:
        """Quadrature weight attached to every node."""
        w = self.h**self.dim
        return w * self.tau if self.time_dependent else w

    @property
    def space_weight(self) -> float:
        return self.h**self.dim

    def spatial(self) -> "Grid":
        """The stationary grid sharing this grid's spatial mesh."""
        return Grid(self.dim, self.n_cells)

    def with_levels(self, time_levels: str) -> "Grid":
        return Grid(self.dim, self.n_cells, self.n_time_steps, self.T, time_levels)

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(1, self.n_cells) * self.h

    @cached_property
    def times(self) -> np.ndarray:
        first = 1 if self.time_levels == "right" else 0
        return np.arange(first, first + self.n_time_steps) * self.tau

    def coords(self) -> tuple[np.ndarray, ...]:
        """Spatial node coordinates, each broadcast to ``space_shape``."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(*x)`` (stationary) or ``func(*x, t)`` on all nodes."""
        xs = self.coords()
        if not self.time_dependent:
            vals = np.broadcast_to(func(*xs), self.space_shape)
            return np.array(vals, dtype=float).ravel()
        out = np.empty(self.shape)
        for n, t in enumerate(self.times):
            out[n] = func(*xs, t)
        return out.ravel()

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def check(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim != 1 or a.shape[0] != self.size:
            raise ShapeError(f"field of shape {a.shape} does not match grid size {self.size}")
        return a

    def inner(self, a, b) -> float:
        a, b = self.check(a), self.check(b)
        return float(self.weight * np.dot(a, b))

    def norm(self, a) -> float:
        a = self.check(a)
        return float(np.sqrt(self.weight * np.dot(a, a)))
