import httpx
import pytest
from fastapi.testclient import TestClient

from pdcontrol.neural import net_to_dict
from pdcontrol.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok" and body["version"]


def test_solve(client):
    resp = client.post("/solve", json={"example": 3, "method": "PD-I", "n_cells": 32,
                                       "log_every": 5, "include_fields": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["converged"] and body["rule"] == "enlarged"
    assert body["pde_solves"] == 2 * body["iterations"]
    assert body["err_u_rel"] < 5e-2 and len(body["u"]) == 31
    ks = [row["k"] for row in body["log"]]
    assert ks[:2] == [5, 10] and ks[-1] == body["iterations"]


def test_solve_example2_reports_noz(client):
    body = client.post("/solve", json={"example": 2, "n_cells": 16, "mu": 2e-2}).json()
    assert body["noz"] == 0.0 and body["err_u_abs"] is None


@pytest.mark.parametrize("payload", [
    {"example": 7},
    {"example": 1, "alpha": -1.0},
    {"method": "PD-I"},
])
def test_solve_schema_errors(client, payload):
    assert client.post("/solve", json=payload).status_code == 422


def test_domain_errors_map_to_422(client):
    resp = client.post("/solve", json={"example": 1, "method": "PD-ONet", "model": "x.json"})
    assert resp.status_code == 422 and resp.json()["error"] == "ConfigurationError"
    resp = client.post("/solve", json={"example": 1, "method": "nonsense"})
    assert resp.status_code == 422


def test_bench(client):
    cfg = "[suite]\nwall_time = false\n[run a]\nexample = 3\nn_cells = 16\nmax_iter = 2\n"
    body = client.post("/bench", json={"config": cfg}).json()
    assert body["exit_code"] == 1 and body["summary"]["n_runs"] == 1
    assert body["csv"].splitlines()[1].startswith("PD-I,0.0625,,2,")


def test_train_and_eval_round_trip(client, tmp_path):
    resp = client.post("/train", json={"n_cells": 8, "n_samples": 4, "iterations": 30,
                                       "hidden": [5], "n_basis": 3, "log_every": 0,
                                       "out": str(tmp_path / "m.json")})
    assert resp.status_code == 200
    body = resp.json()
    assert body["saved_to"] and (tmp_path / "m.json").exists()
    assert len(body["loss_curve"]) >= 1 and body["model"]["schema"] == "pdcontrol.operator_net"
    ev = client.post("/eval", json={"model_doc": body["model"], "n_draws": 5}).json()
    assert ev["n_draws"] == 5 and not ev["passed"]


def test_eval_trained_net(client, elliptic_net):
    doc = net_to_dict(elliptic_net)
    ev = client.post("/eval", json={"model_doc": doc}).json()
    assert ev["passed"] and ev["mean_rel_error"] <= 5e-2 and ev["nu"] == 1.0


def test_eval_needs_model(client):
    assert client.post("/eval", json={}).status_code == 422
