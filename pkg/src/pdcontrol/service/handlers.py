"""Request handlers, used in-process by the CLI and behind the HTTP routes."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..bench.examples import ExampleSpec, build_example, step_rule
from ..bench.metrics import compute_errors, noz
from ..bench.suite import parse_config, run_specs
from ..errors import ConfigurationError
from ..grid import Grid
from ..neural.io import load_net, net_from_dict, net_to_dict, save_net
from ..neural.surrogate import fidelity_gate
from ..neural.training import NetConfig, train_surrogate
from ..pde import EllipticProblem, make_elliptic_operator
from ..solver import solve
from .schemas import (BenchRequest, BenchResponse, EvalRequest, EvalResponse, LogRowModel,
                      SolveRequest, SolveResponse, TrainRequest, TrainResponse)

_SERVICE_ONLY = {"log_every", "include_fields"}


def handle_solve(req: SolveRequest) -> SolveResponse:
    spec = ExampleSpec(**req.model_dump(exclude=_SERVICE_ONLY))
    prob = build_example(spec)
    rule = step_rule(spec)
    rep = solve(prob, rule, tol=spec.tol, max_iter=spec.max_iter, log_every=req.log_every)
    out = dict(example=spec.example, method=spec.method, rule=rule.kind, r=rule.r0, s=rule.s0,
               mesh_h=spec.h, mesh_tau=spec.tau, converged=rep.converged,
               iterations=rep.iterations, pde_solves=rep.pde_solves, objective=rep.objective,
               norm_estimate=prob.op.norm_estimate, step_warning=rep.step_warning,
               wall_time_s=rep.wall_time,
               log=[LogRowModel(**row.__dict__) for row in rep.log])
    if prob.exact is not None:
        out.update(compute_errors(rep.u, rep.y, prob.exact, prob.op.control_grid,
                                  prob.op.state_grid))
    if spec.example == 2:
        out["noz"] = noz(rep.u)
    if req.include_fields:
        out.update(u=rep.u.tolist(), y=rep.y.tolist())
    return SolveResponse(**out)


def handle_bench(req: BenchRequest) -> BenchResponse:
    base = Path(req.base_dir) if req.base_dir else None
    specs, options = parse_config(req.config, base_dir=base)
    report = run_specs(specs, workers=options["workers"], record_wall_time=options["wall_time"],
                       log_every=req.log_every)
    return BenchResponse(csv=report.to_csv(), summary=report.summary(),
                         exit_code=report.exit_code)


def handle_train(req: TrainRequest) -> TrainResponse:
    config = NetConfig(hidden=tuple(req.hidden), n_basis=req.n_basis)
    net, curve = train_surrogate(EllipticProblem(nu=req.nu, c=req.c), n_cells=req.n_cells,
                                 N1=req.n_samples, iterations=req.iterations, lr=req.lr,
                                 seed=req.seed, config=config, log_every=req.log_every)
    saved = str(save_net(net, req.out)) if req.out else None
    every = max(1, len(curve) // 200)
    return TrainResponse(final_loss=net.meta["final_loss"], loss_curve=curve[::every].tolist(),
                         loss_every=every, train_time_s=net.meta["train_time_s"],
                         saved_to=saved, model=net_to_dict(net))


def handle_eval(req: EvalRequest) -> EvalResponse:
    if req.model_doc is not None:
        net = net_from_dict(req.model_doc)
    elif req.model is not None:
        net = load_net(req.model)
    else:
        raise ConfigurationError("eval needs a model path or document")
    nu = req.nu if req.nu is not None else net.meta.get("nu")
    c = req.c if req.c is not None else net.meta.get("c")
    if nu is None or c is None:
        raise ConfigurationError("model carries no coefficients; pass nu and c explicitly")
    n_cells = net.sensors.shape[0] - 1
    reference = make_elliptic_operator(Grid(1, n_cells), EllipticProblem(nu=nu, c=c))
    rep = fidelity_gate(net, reference, n_draws=req.n_draws, seed=req.seed,
                        threshold=req.threshold, input_scaling=req.input_scaling)
    return EvalResponse(**rep.as_dict(), nu=float(nu), c=float(c))
