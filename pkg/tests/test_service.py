import json

import pytest
from fastapi.testclient import TestClient

from pdmp_verify.service import create_app

COOK_MODEL = {"type": "cook", "ka": 1.0, "kd": 1.0, "jp": 2.0, "kp": 1.0}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_simulate_returns_artifacts(client):
    body = {
        "model": COOK_MODEL,
        "seed": 3,
        "simulate": {"start": {"mode": 0, "x": [1.3]}, "horizon": 5.0, "step": 0.02},
    }
    resp = client.post("/simulate", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["status"] == "ok" and payload["exit_code"] == 0
    assert "trajectory.csv" in payload["artifacts"]
    header = payload["artifacts"]["trajectory.csv"].splitlines()[0]
    assert header == "t,mode,x_1,event"


def test_check_invariance_pass_and_fail(client):
    base = {"model": COOK_MODEL}
    good = dict(base, check={"set": {"modes": [0, 1], "lo": [0.0], "hi": [2.0]}})
    resp = client.post("/check-invariance", json=good)
    assert resp.status_code == 200 and resp.json()["status"] == "ok"

    bad = dict(base, check={"set": {"modes": [0, 1], "lo": [0.5], "hi": [2.0]}})
    resp = client.post("/check-invariance", json=bad)
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["status"] == "fail" and payload["exit_code"] == 1
    assert payload["summary"]["worst"]["condition"] == "flow"


def test_value_endpoint(client):
    body = {
        "model": COOK_MODEL,
        "seed": 5,
        "value": {
            "kind": "invariance",
            "set": {"modes": [0, 1], "lo": [0.0], "hi": [2.0]},
            "start": {"mode": 0, "x": [1.0]},
            "paths": 50, "horizon": 5.0, "step": 0.05,
        },
    }
    resp = client.post("/value", json=body)
    assert resp.status_code == 200
    est = json.loads(resp.json()["artifacts"]["estimate.json"])
    assert abs(est["mean"]) < 1e-9


def test_solve_hjb_endpoint(client):
    body = {
        "model": COOK_MODEL,
        "hjb": {
            "cost": "viability",
            "set": {"modes": [0, 1], "lo": [0.5], "hi": [1.0]},
            "domain": {"modes": [0, 1], "lo": [0.0], "hi": [2.0]},
            "shape": [33], "step": 0.02, "tol": 1e-6,
            "probes": [{"mode": 0, "x": [1.5]}],
        },
    }
    resp = client.post("/solve-hjb", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["summary"]["solve_report"]["converged"]
    assert "value_grid.json" in payload["artifacts"]
    assert payload["summary"]["probes"][0]["value"] > 0


def test_reach_endpoint(client):
    body = {
        "model": COOK_MODEL,
        "seed": 2,
        "reach": {
            "target": {"modes": [0, 1], "lo": [0.7], "hi": [1.2]},
            "start": {"mode": 0, "x": [0.3]},
            "domain": {"modes": [0, 1], "lo": [0.0], "hi": [2.0]},
            "shape": [65], "step": 0.01, "tol": 1e-6, "audit_functions": 3,
        },
    }
    resp = client.post("/reach", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["summary"]["decision"] == "REACHABLE"
    assert payload["exit_code"] == 0


def test_validation_error_maps_to_422(client):
    resp = client.post("/simulate", json={"model": {"type": "cook", "ka": -1.0,
                                                    "kd": 1.0, "jp": 1.0, "kp": 1.0}})
    assert resp.status_code == 422


def test_missing_section_maps_to_422(client):
    resp = client.post("/value", json={"model": COOK_MODEL})
    assert resp.status_code == 422


def test_op_mismatch_maps_to_422(client):
    body = {
        "op": "simulate",
        "model": COOK_MODEL,
        "check": {"set": {"modes": [0, 1], "lo": [0.0], "hi": [2.0]}},
    }
    resp = client.post("/check-invariance", json=body)
    assert resp.status_code == 422
