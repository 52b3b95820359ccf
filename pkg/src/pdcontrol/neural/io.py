"""JSON model files for :class:`OperatorNet`.

Floats are written with Python's shortest round-trip ``repr``, so a
save/load cycle reproduces every parameter bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from .net import MLP, OperatorNet

SCHEMA = "pdcontrol.operator_net"
VERSION = 1


def _mlp_to_dict(mlp: MLP) -> dict:
    return {"widths": mlp.widths,
            "weights": [w.ravel(order="C").tolist() for w in mlp.weights],
            "biases": [b.tolist() for b in mlp.biases]}


def _mlp_from_dict(d: dict) -> MLP:
    widths = d["widths"]
    weights = [np.asarray(w, dtype=float).reshape(a, b)
               for w, a, b in zip(d["weights"], widths[:-1], widths[1:])]
    return MLP(weights, [np.asarray(b, dtype=float) for b in d["biases"]])


def net_to_dict(net: OperatorNet) -> dict:
    return {"schema": SCHEMA, "version": VERSION,
            "branch": _mlp_to_dict(net.branch), "trunk": _mlp_to_dict(net.trunk),
            "b0": float(net.b0[0]), "sensors": net.sensors.tolist(),
            "boundary": net.boundary, "meta": net.meta}


def net_from_dict(d: dict) -> OperatorNet:
    if d.get("schema") != SCHEMA:
        raise ConfigurationError(f"not an operator-net document (schema={d.get('schema')!r})")
    if d.get("version") != VERSION:
        raise ConfigurationError(f"unsupported model version {d.get('version')!r}")
    return OperatorNet(_mlp_from_dict(d["branch"]), _mlp_from_dict(d["trunk"]), b0=d["b0"],
                       sensors=d["sensors"], boundary=d["boundary"], meta=dict(d.get("meta", {})))


def save_net(net: OperatorNet, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(net_to_dict(net), indent=1))
    return path


def load_net(path) -> OperatorNet:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot load model {path}: {exc}") from exc
    return net_from_dict(doc)
