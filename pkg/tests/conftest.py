"""Shared fixtures.  The expensive ones (trained nets, the mesh sweep) are session-scoped."""
from __future__ import annotations

import numpy as np
import pytest

from pdcontrol.bench import ExampleSpec, run_spec
from pdcontrol.neural import train_surrogate
from pdcontrol.pde import EllipticProblem

SWEEP_MESHES = (16, 32, 64, 128, 256)
TRAIN_ITERATIONS = 20000
TRAIN_SAMPLES = 1000


def dense_matrix(apply, n_in: int) -> np.ndarray:
    """Columns ``apply(e_j)``; a brute-force oracle for small linear maps."""
    cols = [apply(np.eye(n_in)[j]) for j in range(n_in)]
    return np.column_stack(cols)


@pytest.fixture(scope="session")
def elliptic_training():
    """Surrogate for ``-y'' + y = u`` trained with the full recipe, plus its loss curve."""
    return train_surrogate(EllipticProblem(nu=1.0, c=1.0), n_cells=64, N1=TRAIN_SAMPLES,
                           iterations=TRAIN_ITERATIONS, seed=0, log_every=0)


@pytest.fixture(scope="session")
def elliptic_net(elliptic_training):
    return elliptic_training[0]


@pytest.fixture(scope="session")
def step_net():
    """Surrogate for one backward-Euler step ``-tau y'' + y = v`` at ``tau = 1/64``."""
    net, _ = train_surrogate(EllipticProblem(nu=1.0 / 64, c=1.0), n_cells=64,
                                 N1=TRAIN_SAMPLES, iterations=TRAIN_ITERATIONS, seed=0,
                                 log_every=0)
    return net


@pytest.fixture(scope="session")
def mesh_sweep():
    """Example 1 (alpha = 1e-3) with PD-C and PD-I at every sweep mesh (h = tau)."""
    rows = {}
    for n in SWEEP_MESHES:
        for method in ("PD-C", "PD-I"):
            res = run_spec(ExampleSpec(1, method, n_cells=n, estimate_norm=False))
            assert res.converged, (n, method)
            rows[(n, method)] = res.row
    return rows


@pytest.fixture(scope="session")
def mu_sweep():
    """Example 2 at h = 1/64 for the four sparsity weights, PD-C and PD-I."""
    rows = {}
    for mu in (0.0, 5e-4, 3e-3, 2e-2):
        for method in ("PD-C", "PD-I"):
            res = run_spec(ExampleSpec(2, method, mu=mu))
            assert res.converged, (mu, method)
            rows[(mu, method)] = res.row
    return rows


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number: int, title: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  [{number:2d}] {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
