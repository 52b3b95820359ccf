import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import fd_check, toy_batch, toy_net
from pdcontrol.errors import (ConfigurationError, InvalidParameterError, ShapeError,
                              TrainingDiverged)
from pdcontrol.grid import Grid
from pdcontrol.neural import (MLP, AdamState, NetConfig, OperatorNet, TrainingSet, adam_step,
                              as_solution_operator, fidelity_gate, forward, generate_dataset,
                              grad, init_net, load_net, loss, loss_and_grad, net_from_dict,
                              net_to_dict, predict, sample_grf, save_net,
                              surrogate_parabolic_march, surrogate_parabolic_operator, train)
from pdcontrol.neural.grf import grf_mode_std
from pdcontrol.neural.training import pad_boundary
from pdcontrol.pde import EllipticProblem, make_elliptic_operator, make_parabolic_operator


def _const_mlp(widths, out_value):
    """Zero weights; the output layer bias carries ``out_value``."""
    mlp = MLP.init(widths, np.random.default_rng(0))
    mlp.weights = [np.zeros_like(w) for w in mlp.weights]
    mlp.biases = [np.zeros_like(b) for b in mlp.biases]
    mlp.biases[-1] = np.full(widths[-1], float(out_value))
    return mlp


class TestForward:
    def test_constant_bias(self):
        net = OperatorNet(_const_mlp([2, 3, 1], 0.0), _const_mlp([1, 3, 1], 0.0), b0=1.7,
                          sensors=[0, 1], boundary=None)
        assert forward(net, [0.3, -2.0], 0.4) == 1.7

    def test_single_basis_product(self):
        net = OperatorNet(_const_mlp([2, 4, 1], 2.0), _const_mlp([1, 4, 1], 3.0), b0=0.0,
                          sensors=[0, 1], boundary=None)
        assert forward(net, [1.0, 1.0], 0.5) == 6.0

    @given(st.integers(0, 1000), st.sampled_from([0.0, 1.0]))
    def test_boundary_factor_vanishes(self, seed, z):
        net = toy_net(seed, boundary="x(x-1)")
        u = np.random.default_rng(seed).standard_normal(3)
        assert forward(net, u, z) == 0.0

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            OperatorNet(_const_mlp([2, 1], 0), _const_mlp([1, 2], 0), 0.0, sensors=[0, 1])
        with pytest.raises(ShapeError):
            OperatorNet(_const_mlp([3, 1], 0), _const_mlp([1, 1], 0), 0.0, sensors=[0, 1])
        with pytest.raises(InvalidParameterError):
            OperatorNet(_const_mlp([2, 1], 0), _const_mlp([1, 1], 0), 0.0, sensors=[0, 1],
                        boundary="sin")


class TestLoss:
    def test_perfect_fit(self):
        net, batch = toy_net(0), toy_batch(0)
        batch.targets = predict(net, batch.inputs, batch.points)
        assert loss(net, batch) == 0.0
        for g in grad(net, batch):
            np.testing.assert_array_equal(g, 0.0)

    def test_single_triplet(self):
        net = OperatorNet(_const_mlp([1, 1], 0.0), _const_mlp([1, 1], 0.0), b0=1.0,
                          sensors=[0.5], boundary=None)
        assert loss(net, TrainingSet([[0.0]], [0.3], [[0.0]])) == 1.0

    def test_order_invariance(self):
        net, batch = toy_net(1), toy_batch(1)
        perm_f, perm_p = [2, 0, 1], [3, 1, 0, 2]
        shuffled = TrainingSet(batch.inputs[perm_f], batch.points[perm_p],
                               batch.targets[perm_f][:, perm_p])
        assert loss(net, shuffled) == pytest.approx(loss(net, batch), rel=1e-14)

    def test_empty_batch(self):
        with pytest.raises(InvalidParameterError):
            loss(toy_net(0), TrainingSet(np.zeros((0, 3)), np.zeros(0), np.zeros((0, 0))))

    def test_nonfinite_data_rejected(self):
        with pytest.raises(InvalidParameterError):
            TrainingSet([[np.nan, 0, 0]], [0.5], [[0.0]])


class TestGradient:
    def test_five_parameter_net(self):
        net = toy_net(3, m=1, hidden=(), n=1)
        assert sum(p.size for p in net.parameters()) == 5
        assert fd_check(net, toy_batch(3, m=1)) <= 1e-5

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([None, "x(x-1)"]))
    def test_toy_nets(self, seed, boundary):
        net = toy_net(seed, boundary=boundary)
        assert sum(p.size for p in net.parameters()) <= 50
        assert fd_check(net, toy_batch(seed)) <= 1e-5

    def test_bias_gradient(self):
        net, batch = toy_net(4), toy_batch(4)
        resid = predict(net, batch.inputs, batch.points) - batch.targets
        assert grad(net, batch)[-1][0] == pytest.approx(2 * resid.mean(), rel=1e-12)


class TestAdam:
    def test_zero_gradient(self):
        params = [np.array([1.0, -2.0]), np.array([[0.5]])]
        state = AdamState.for_params(params)
        out = adam_step(params, [np.zeros(2), np.zeros((1, 1))], state)
        for a, b in zip(out, params):
            np.testing.assert_array_equal(a, b)

    def test_first_step_magnitude(self):
        g = np.array([3.0, -1e-3, 0.5])
        state = AdamState.for_params([np.zeros(3)], lr=1e-3)
        out = adam_step([np.zeros(3)], [g], state)[0]
        np.testing.assert_allclose(out, -1e-3 * g / (np.abs(g) + 1e-8))
        np.testing.assert_allclose(np.abs(out), 1e-3, rtol=1e-4)

    def test_deterministic(self):
        p, g = [np.arange(4.0)], [np.array([0.1, -0.2, 0.3, 0.0])]
        s1, s2 = AdamState.for_params(p), AdamState.for_params(p)
        np.testing.assert_array_equal(adam_step(p, g, s1)[0], adam_step(p, g, s2)[0])
        assert s1.step == s2.step == 1

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_step([np.zeros(2)], [np.zeros(3)], AdamState())


class TestGRF:
    def test_constant(self):
        mpmath.mp.dps = 30
        exact = 49 * (mpmath.pi**2 + 49) ** mpmath.mpf(-1.25)
        assert grf_mode_std(1) == pytest.approx(float(exact), rel=1e-14)
        assert float(exact) == pytest.approx(0.300, abs=5e-4)

    def test_statistics(self):
        draws = sample_grf(11, 65, 10_000)
        std = draws.std(axis=0)
        assert np.all(np.abs(draws.mean(axis=0))[1:-1] <= 3 * std[1:-1] / 100)
        np.testing.assert_array_equal(draws[:, [0, -1]], 0.0)
        # recover the sine coefficients by discrete orthogonality
        x = np.linspace(0, 1, 65)
        k = np.arange(1, 9)
        coeffs = draws @ (np.sqrt(2) * np.sin(np.pi * np.outer(k, x))).T / 64
        np.testing.assert_allclose(coeffs.std(axis=0), grf_mode_std(k), rtol=0.05)

    def test_deterministic(self):
        np.testing.assert_array_equal(sample_grf(5, 33), sample_grf(5, 33))
        assert sample_grf(5, 33).shape == (33,)

    def test_too_few_points(self):
        with pytest.raises(InvalidParameterError):
            sample_grf(0, 2)


@pytest.fixture(scope="module")
def smoke_op():
    return make_elliptic_operator(Grid(1, 2), EllipticProblem(1.0, 1.0))


class TestDataset:
    def test_smoke_set(self, smoke_op):
        data = generate_dataset(smoke_op, 2, 3, seed=0)
        assert len(data) == 6
        for u, y in zip(data.inputs, data.targets):
            np.testing.assert_array_equal(y, pad_boundary(smoke_op.apply_linear(u[1:-1])))

    def test_regeneration_identical(self, smoke_op):
        a, b = generate_dataset(smoke_op, 4, 3, 9), generate_dataset(smoke_op, 4, 3, 9)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.targets, b.targets)

    def test_zero_input(self):
        op = make_elliptic_operator(Grid(1, 64), EllipticProblem(1.0, 1.0))
        np.testing.assert_array_equal(op.apply_linear(np.zeros(63)), 0.0)

    def test_grid_mismatch(self, smoke_op):
        with pytest.raises(ShapeError):
            generate_dataset(smoke_op, 2, 5, 0)


@pytest.fixture(scope="module")
def smoke_run(smoke_op):
    data = generate_dataset(smoke_op, 2, 3, seed=0)
    return data, train(data, iterations=20000, seed=0, log_every=0)


class TestTraining:
    def test_smoke_fit(self, smoke_run):
        _, (net, curve) = smoke_run
        assert curve.min() < 1e-4 and len(curve) == 20000

    def test_same_seed_identical(self, smoke_run):
        data, (net, _) = smoke_run
        again, _ = train(data, iterations=20000, seed=0, log_every=0)
        for a, b in zip(net.parameters(), again.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_initialization_range(self):
        net = init_net(NetConfig(), 65, 1, seed=0)
        for mlp in (net.branch, net.trunk):
            for w, b in zip(mlp.weights, mlp.biases):
                bound = 1 / np.sqrt(w.shape[0])
                assert np.abs(w).max() <= bound and np.abs(b).max() <= bound
        assert net.b0[0] == 0.0

    def test_divergence(self, smoke_op):
        data = generate_dataset(smoke_op, 2, 3, seed=0)
        with pytest.raises(TrainingDiverged) as info, np.errstate(all="ignore"):
            train(data, iterations=50, lr=1e200, seed=0, log_every=0)
        assert 0 <= info.value.iteration < 50

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            train(TrainingSet(np.zeros((0, 3)), np.zeros(0), np.zeros((0, 0))), iterations=1)


def test_loss_curve_drops(elliptic_training):
    curve = elliptic_training[1]
    blocks = curve.reshape(-1, 1000).mean(axis=1)
    assert blocks[-1] < 1e-2 * blocks[0]
    assert blocks[-1] == pytest.approx(blocks.min(), rel=0.5)


@pytest.mark.xfail(strict=True, reason="full-batch Adam at lr 1e-3 shows periodic loss spikes; "
                                      "the 100-iteration moving average is not monotone")
def test_loss_curve_moving_average_monotone(elliptic_training):
    curve = elliptic_training[1]
    avg = np.convolve(curve, np.ones(100) / 100, mode="valid")
    assert np.all(np.diff(avg) <= 0)


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        net = toy_net(5, boundary="x(x-1)")
        net.meta = {"seed": 5, "iterations": 0, "final_loss": 0.1 + 0.2}
        path = save_net(net, tmp_path / "m.json")
        back = load_net(path)
        for a, b in zip(net.parameters(), back.parameters()):
            assert a.tobytes() == b.tobytes()
        assert back.boundary == "x(x-1)" and back.meta == net.meta
        np.testing.assert_array_equal(back.sensors, net.sensors)
        assert path.read_text() == save_net(back, tmp_path / "again.json").read_text()

    def test_schema_checks(self):
        doc = net_to_dict(toy_net(0))
        with pytest.raises(ConfigurationError):
            net_from_dict({**doc, "version": 99})
        with pytest.raises(ConfigurationError):
            net_from_dict({**doc, "schema": "other"})


@pytest.fixture(scope="module")
def exact():
    return make_elliptic_operator(Grid(1, 64), EllipticProblem(1.0, 1.0))


class TestSurrogate:
    def test_gate_passes_and_norm_inherited(self, elliptic_net, exact):
        report = fidelity_gate(elliptic_net, exact)
        assert report.passed and report.mean_rel_error <= 5e-2 and report.n_draws == 100
        op = as_solution_operator(elliptic_net, Grid(1, 64), reference=exact)
        assert op.pde_solves_per_apply == 0
        assert op.norm_estimate == pytest.approx(1 / (np.pi**2 + 1), rel=1e-3)

    def test_gate_is_enforced(self, smoke_op, exact):
        data = generate_dataset(exact, 20, 65, seed=1)
        weak, _ = train(data, iterations=10, seed=0, log_every=0)
        with pytest.raises(ConfigurationError):
            as_solution_operator(weak, Grid(1, 64), reference=exact)
        with pytest.raises(ConfigurationError):
            as_solution_operator(weak, Grid(1, 64))  # no reference, gate on

    def test_boundary_nodes_zero(self, elliptic_net):
        u = sample_grf(3, 65)
        out = predict(elliptic_net, u[None], elliptic_net.sensors)[0]
        assert out[0] == 0.0 and out[-1] == 0.0

    def test_zero_input(self, elliptic_net):
        raw = as_solution_operator(elliptic_net, Grid(1, 64), gate=False, input_scaling="none")
        scaled = as_solution_operator(elliptic_net, Grid(1, 64), gate=False)
        zero = np.zeros(63)
        # the plain net has no exactness guarantee off the data manifold
        assert 0 < np.abs(raw.apply_linear(zero)).max() < 1e-2
        np.testing.assert_array_equal(scaled.apply_linear(zero), 0.0)

    def test_scaled_evaluation_is_homogeneous(self, elliptic_net):
        op = as_solution_operator(elliptic_net, Grid(1, 64), gate=False)
        u = sample_grf(4, 65)[1:-1]
        np.testing.assert_allclose(op.apply_linear(7.5 * u), 7.5 * op.apply_linear(u),
                                   rtol=1e-12, atol=1e-15)

    def test_grid_mismatch(self, elliptic_net):
        with pytest.raises(ShapeError):
            as_solution_operator(elliptic_net, Grid(1, 32), gate=False)


class TestParabolicSurrogate:
    tau = 1 / 64

    def test_tau_mismatch(self, step_net):
        with pytest.raises(ConfigurationError):
            surrogate_parabolic_march(step_net, np.zeros((32, 63)), None, 1 / 32, 32)
        with pytest.raises(ConfigurationError):
            surrogate_parabolic_operator(step_net, Grid(1, 64, 32), gate=False)

    def test_zero_march(self, step_net):
        out = surrogate_parabolic_march(step_net, np.zeros((64, 63)), None, self.tau, 64)
        np.testing.assert_array_equal(out, 0.0)
        raw = surrogate_parabolic_march(step_net, np.zeros((64, 63)), None, self.tau, 64,
                                        input_scaling="none")
        assert np.abs(raw).max() < 1e-1

    def test_one_step_is_one_call(self, step_net):
        u = sample_grf(8, 65)[1:-1]
        f = sample_grf(9, 65)[1:-1]
        phi = sample_grf(10, 65)[1:-1]
        march = surrogate_parabolic_march(step_net, u[None], f[None], self.tau, 1, phi=phi)
        single = as_solution_operator(step_net, Grid(1, 64), gate=False).apply_linear(
            self.tau * (u + f) + phi)
        np.testing.assert_array_equal(march[0], single)

    def test_march_against_exact(self, step_net):
        grid = Grid(1, 64, 64)
        exact = make_parabolic_operator(grid, observe="right")
        step_ref = make_elliptic_operator(Grid(1, 64), EllipticProblem(self.tau, 1.0))
        op = surrogate_parabolic_operator(step_net, grid, observe="right",
                                          step_reference=step_ref)
        rng = np.random.default_rng(12)
        errs = []
        for _ in range(20):
            u = sample_grf(rng, 65, 64)[:, 1:-1].ravel()
            y = exact.apply_linear(u)
            errs.append(np.linalg.norm(op.apply_linear(u) - y) / np.linalg.norm(y))
            p = sample_grf(rng, 65, 64)[:, 1:-1].ravel()
            q = exact.apply_adjoint(p)
            errs.append(np.linalg.norm(op.apply_adjoint(p) - q) / np.linalg.norm(q))
        assert max(errs) <= 1e-1
