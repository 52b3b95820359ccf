"""Training data from the exact discrete solver and full-batch Adam training."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError, ShapeError, TrainingDiverged
from ..grid import Grid
from ..pde import EllipticProblem, SolutionOperator, make_elliptic_operator
from .adam import AdamState, adam_step
from .grf import sample_grf
from .net import MLP, OperatorNet, TrainingSet, loss_and_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetConfig:
    hidden: tuple[int, ...] = (20, 20)
    n_basis: int = 20
    boundary: str | None = "x(x-1)"


def pad_boundary(interior: np.ndarray) -> np.ndarray:
    """Append the zero Dirichlet values to interior nodal values (last axis)."""
    interior = np.asarray(interior, dtype=float)
    width = [(0, 0)] * (interior.ndim - 1) + [(1, 1)]
    return np.pad(interior, width)


def generate_dataset(op: SolutionOperator, N1: int, N2: int, seed) -> TrainingSet:
    """``N1`` random-field inputs and their exact discrete responses.

    Sensors and evaluation points are the same ``N2`` equi-spaced nodes of
    [0, 1], so ``op`` must live on the 1D grid with ``N2 - 1`` cells.
    """
    grid = op.control_grid
    if grid.dim != 1 or grid.time_dependent or grid.n_cells != N2 - 1:
        raise ShapeError(f"operator grid {grid} does not match {N2} equi-spaced points")
    if N1 < 1:
        raise InvalidParameterError("N1 must be positive")
    inputs = sample_grf(seed, N2, N1)
    targets = np.stack([pad_boundary(op.apply_linear(u[1:-1])) for u in inputs])
    return TrainingSet(inputs, np.linspace(0.0, 1.0, N2), targets)


def init_net(config: NetConfig, n_sensors: int, coord_dim: int, seed) -> OperatorNet:
    rng = np.random.default_rng(seed)
    branch = MLP.init([n_sensors, *config.hidden, config.n_basis], rng)
    trunk = MLP.init([coord_dim, *config.hidden, config.n_basis], rng)
    return OperatorNet(branch, trunk, b0=0.0, sensors=np.linspace(0.0, 1.0, n_sensors),
                       boundary=config.boundary)


def train(dataset: TrainingSet, config: NetConfig = NetConfig(), iterations: int = 20000,
          lr: float = 1e-3, seed=0, log_every: int = 1000):
    """Full-batch Adam on the mean squared error.

    Returns ``(net, loss_curve)``; ``loss_curve[i]`` is the loss before update
    ``i``.  A non-finite loss raises :class:`TrainingDiverged`.
    """
    if len(dataset) == 0:
        raise InvalidParameterError("empty dataset")
    net = init_net(config, dataset.inputs.shape[1], dataset.points.shape[1], seed)
    state = AdamState.for_params(net.parameters(), lr=lr)
    curve = np.empty(iterations)
    start = time.perf_counter()
    for it in range(iterations):
        value, grads = loss_and_grad(net, dataset)
        if not np.isfinite(value):
            raise TrainingDiverged(it, value)
        curve[it] = value
        net.set_parameters(adam_step(net.parameters(), grads, state))
        if log_every and it % log_every == 0:
            logger.info("iter %6d  loss %.4e", it, value)
    net.meta = {"seed": seed if isinstance(seed, int) else None, "iterations": iterations,
                "lr": lr, "final_loss": float(curve[-1]) if iterations else None,
                "n_samples": int(dataset.inputs.shape[0]),
                "input_ref_norm": reference_norm(dataset.inputs),
                "train_time_s": time.perf_counter() - start}
    return net, curve


def reference_norm(inputs) -> float:
    """Median Euclidean norm of the training inputs (the scale the net knows)."""
    return float(np.median(np.linalg.norm(np.atleast_2d(inputs), axis=1)))


def train_surrogate(problem: EllipticProblem, n_cells: int = 64, N1: int = 1000,
                    iterations: int = 20000, lr: float = 1e-3, seed: int = 0,
                    config: NetConfig = NetConfig(), log_every: int = 1000):
    """Dataset generation plus training for ``-nu y'' + c y = u`` on [0, 1].

    The problem coefficients are stored in ``net.meta`` so that time-stepped
    surrogates can check that they match the step size.
    """
    op = make_elliptic_operator(Grid(1, n_cells), problem)
    data = generate_dataset(op, N1, n_cells + 1, seed)
    net, curve = train(data, config, iterations=iterations, lr=lr, seed=seed,
                       log_every=log_every)
    net.meta.update(nu=problem.nu, c=problem.c)
    return net, curve
