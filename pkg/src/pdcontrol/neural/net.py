"""Unstacked DeepONet with hand-written reverse-mode gradients.

``G(u)(z) = (sum_i b_i(u) t_i(z) + b0) * w(z)`` where ``b`` is the branch MLP
applied to the sensor values of ``u``, ``t`` the trunk MLP applied to the
coordinate ``z`` and ``w`` an optional boundary factor (``x(x-1)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidParameterError, ShapeError

BOUNDARY_FACTORS = {
    None: None,
    "x(x-1)": lambda z: z[:, 0] * (z[:, 0] - 1.0),
}


@dataclass
class MLP:
    """Fully connected net, tanh on hidden layers and identity on the output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @classmethod
    def init(cls, widths, rng: np.random.Generator) -> "MLP":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases)

    def forward(self, x: np.ndarray, keep: bool = False):
        acts = [x]
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if i < n - 1:
                x = np.tanh(x)
            acts.append(x)
        return (x, acts) if keep else x

    def backward(self, acts, grad_out):
        """Gradients of the weights/biases given ``d loss / d output``."""
        n = len(self.weights)
        gw, gb = [None] * n, [None] * n
        g = grad_out
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                g = g * (1.0 - acts[i + 1] ** 2)
            gw[i] = acts[i].T @ g
            gb[i] = g.sum(axis=0)
            if i > 0:
                g = g @ self.weights[i].T
        return gw, gb

    def parameters(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)


@dataclass
class OperatorNet:
    branch: MLP
    trunk: MLP
    b0: np.ndarray
    sensors: np.ndarray
    boundary: Optional[str] = "x(x-1)"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.b0 = np.asarray(self.b0, dtype=float).reshape(1)
        self.sensors = np.asarray(self.sensors, dtype=float)
        if self.boundary not in BOUNDARY_FACTORS:
            raise InvalidParameterError(f"unknown boundary factor {self.boundary!r}")
        if self.branch.widths[-1] != self.trunk.widths[-1]:
            raise ShapeError("branch and trunk output widths differ")
        if self.branch.widths[0] != self.sensors.shape[0]:
            raise ShapeError("branch input width must equal the sensor count")

    @property
    def n_basis(self) -> int:
        return self.branch.widths[-1]

    def parameters(self) -> list[np.ndarray]:
        """All trainable arrays; updating them in place updates the net."""
        return self.branch.parameters() + self.trunk.parameters() + [self.b0]

    def set_parameters(self, params) -> None:
        nb = len(self.branch.weights)
        nt = len(self.trunk.weights)
        it = iter(params)
        self.branch.weights = [next(it) for _ in range(nb)]
        self.branch.biases = [next(it) for _ in range(nb)]
        self.trunk.weights = [next(it) for _ in range(nt)]
        self.trunk.biases = [next(it) for _ in range(nt)]
        self.b0 = np.asarray(next(it)).reshape(1)

    def boundary_weight(self, z: np.ndarray) -> np.ndarray:
        fn = BOUNDARY_FACTORS[self.boundary]
        return np.ones(z.shape[0]) if fn is None else fn(z)


def _coords(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return z.reshape(-1, 1) if z.ndim <= 1 else z


def predict(net: OperatorNet, u_sensors, z) -> np.ndarray:
    """Outputs for every (input function, point) pair, shape ``(N1, N2)``."""
    u = np.atleast_2d(np.asarray(u_sensors, dtype=float))
    z = _coords(z)
    return (net.branch.forward(u) @ net.trunk.forward(z).T + net.b0[0]) * net.boundary_weight(z)


def forward(net: OperatorNet, u_sensors, z) -> float:
    """Scalar output for one input function at one coordinate."""
    return float(predict(net, np.asarray(u_sensors)[None, :], np.atleast_1d(z)[None, :])[0, 0])


@dataclass
class TrainingSet:
    """``N1`` input functions at ``m`` sensors, ``N2`` points, targets ``(N1, N2)``."""

    inputs: np.ndarray
    points: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.points = _coords(self.points)
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if self.targets.shape != (self.inputs.shape[0], self.points.shape[0]):
            raise ShapeError("targets must have shape (N1, N2)")
        if not all(np.isfinite(a).all() for a in (self.inputs, self.points, self.targets)):
            raise InvalidParameterError("training data must be finite")

    def __len__(self):
        return self.targets.size


def _check_batch(batch: TrainingSet):
    if len(batch) == 0:
        raise InvalidParameterError("empty batch")


def loss(net: OperatorNet, batch: TrainingSet) -> float:
    _check_batch(batch)
    resid = predict(net, batch.inputs, batch.points) - batch.targets
    return float(np.mean(resid**2))


def loss_and_grad(net: OperatorNet, batch: TrainingSet):
    """Mean squared error and its gradient, ordered like ``net.parameters()``."""
    _check_batch(batch)
    bout, bacts = net.branch.forward(batch.inputs, keep=True)
    tout, tacts = net.trunk.forward(batch.points, keep=True)
    wz = net.boundary_weight(batch.points)
    resid = (bout @ tout.T + net.b0[0]) * wz - batch.targets
    value = float(np.mean(resid**2))
    g = (2.0 / resid.size) * resid * wz
    gb0 = np.array([g.sum()])
    bw, bb = net.branch.backward(bacts, g @ tout)
    tw, tb = net.trunk.backward(tacts, g.T @ bout)
    return value, bw + bb + tw + tb + [gb0]


def grad(net: OperatorNet, batch: TrainingSet) -> list[np.ndarray]:
    return loss_and_grad(net, batch)[1]
