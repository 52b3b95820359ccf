"""Command line client: ``pdcontrol {solve,bench,train,eval,serve}``.

Requests run in-process by default; with ``--server URL`` they are posted to
a running service instead.  Both paths use the same request models.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from .errors import PDControlError
from .service import handlers
from .service.schemas import (BenchRequest, BenchResponse, EvalRequest, EvalResponse,
                              SolveRequest, SolveResponse, TrainRequest, TrainResponse)

logger = logging.getLogger("pdcontrol")

_LOCAL = {"solve": handlers.handle_solve, "bench": handlers.handle_bench,
          "train": handlers.handle_train, "eval": handlers.handle_eval}
_RESPONSES = {"solve": SolveResponse, "bench": BenchResponse, "train": TrainResponse,
              "eval": EvalResponse}


def call(endpoint: str, req: BaseModel, server: Optional[str] = None) -> BaseModel:
    if server is None:
        return _LOCAL[endpoint](req)
    import httpx

    resp = httpx.post(f"{server.rstrip('/')}/{endpoint}", json=req.model_dump(), timeout=None)
    if resp.status_code != 200:
        raise SystemExit(f"server error {resp.status_code}: {resp.text}")
    return _RESPONSES[endpoint].model_validate(resp.json())


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_solve(args) -> int:
    fields = {k: getattr(args, k) for k in SolveRequest.model_fields
              if getattr(args, k, None) is not None}
    if fields.get("model"):
        fields["model"] = str(Path(fields["model"]).resolve())
    res = call("solve", SolveRequest(**fields), args.server)
    for row in res.log:
        print(f"k={row.k:5d}  stop={row.stop_measure:.3e}  J={row.objective:.8e}",
              file=sys.stderr)
    _emit(res.model_dump_json(indent=2), args.out)
    return 0 if res.converged else 1


def cmd_bench(args) -> int:
    cfg = Path(args.config)
    req = BenchRequest(config=cfg.read_text(), base_dir=str(cfg.resolve().parent),
                       log_every=args.log_every or 0)
    res = call("bench", req, args.server)
    out = args.out or "bench.csv"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(res.csv)
    Path(out).with_suffix(".json").write_text(json.dumps(res.summary, indent=2))
    sys.stdout.write(res.csv)
    return res.exit_code


def cmd_train(args) -> int:
    req = TrainRequest(nu=args.nu, c=args.c, n_cells=args.n_cells, n_samples=args.n_samples,
                       iterations=args.iterations, lr=args.lr, seed=args.seed,
                       hidden=args.hidden, n_basis=args.n_basis,
                       out=str(Path(args.out).resolve()) if args.server else args.out,
                       log_every=args.log_every if args.log_every is not None else 1000)
    res = call("train", req, args.server)
    if args.server and not res.saved_to:
        Path(args.out).write_text(json.dumps(res.model, indent=1))
    print(f"final loss {res.final_loss:.4e} after {args.iterations} iterations "
          f"({res.train_time_s:.1f} s); model in {res.saved_to or args.out}")
    return 0


def cmd_eval(args) -> int:
    req = EvalRequest(model=str(Path(args.model).resolve()), nu=args.nu, c=args.c,
                      n_draws=args.n_draws, seed=args.seed, threshold=args.threshold,
                      input_scaling=args.input_scaling)
    res = call("eval", req, args.server)
    _emit(res.model_dump_json(indent=2), args.out)
    return 0 if res.passed else 1


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("pdcontrol.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdcontrol", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--log-every", type=int, default=None, metavar="K",
                        help="emit a progress row every K iterations (0 = off)")
        sp.add_argument("--server", help="post to a running service instead of running locally")

    s = sub.add_parser("solve", help="solve one example problem")
    s.add_argument("--example", type=int, required=True, choices=[1, 2, 3, 4])
    s.add_argument("--method", default="PD-I", help="PD-C, PD-I, APD<m> or PD-ONet")
    for name in ("alpha", "mu", "a", "b", "k_s", "k_a", "nu", "tol", "r", "s"):
        s.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    for name in ("n_cells", "n_time_steps", "max_iter", "seed"):
        s.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    s.add_argument("--model", help="trained model file (PD-ONet)")
    s.add_argument("--backend", choices=["auto", "sparse", "spectral"])
    s.add_argument("--input-scaling", dest="input_scaling", choices=["norm", "none"])
    s.add_argument("--no-gate", dest="gate", action="store_false", default=None,
                   help="skip the surrogate fidelity gate")
    s.add_argument("--include-fields", dest="include_fields", action="store_true", default=None)
    common(s, "JSON report path (default: stdout)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark config")
    b.add_argument("config")
    common(b, "CSV path (summary JSON goes next to it); default bench.csv")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("train", help="train an elliptic surrogate for -nu y'' + c y = u")
    t.add_argument("--nu", type=float, default=1.0)
    t.add_argument("--c", type=float, default=1.0)
    t.add_argument("--n-cells", dest="n_cells", type=int, default=64)
    t.add_argument("--n-samples", dest="n_samples", type=int, default=1000)
    t.add_argument("--iterations", type=int, default=20000)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--hidden", type=int, nargs="+", default=[20, 20])
    t.add_argument("--n-basis", dest="n_basis", type=int, default=20)
    common(t, "model file to write")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="fidelity gate report for a trained model")
    e.add_argument("--model", required=True)
    e.add_argument("--nu", type=float)
    e.add_argument("--c", type=float)
    e.add_argument("--n-draws", dest="n_draws", type=int, default=100)
    e.add_argument("--seed", type=int, default=2024)
    e.add_argument("--threshold", type=float, default=5e-2)
    e.add_argument("--input-scaling", dest="input_scaling", default="norm",
                   choices=["norm", "none"])
    common(e, "JSON report path (default: stdout)")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("serve", help="run the HTTP service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "train" and not args.out:
        raise SystemExit("train needs --out")
    try:
        return args.func(args)
    except PDControlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
