import pytest
from fastapi.testclient import TestClient

import core
from api import app
from conftest import data_path
from textio import parse_ccdfg

client = TestClient(app)


def design(name):
    with open(data_path(name), encoding="utf-8") as f:
        return f.read()


@pytest.fixture(autouse=True)
def open_access(monkeypatch):
    monkeypatch.setattr(core, "API_KEY", None)


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"message": "API running correctly"}


def test_validate():
    response = client.post("/validate", json={"design": design("fig1.ccdfg")})
    assert response.status_code == 200
    assert response.json() == {"pipelinable": True, "diagnostics": []}


def test_validate_violations():
    response = client.post("/validate", json={"design": design("branching.ccdfg")})
    assert response.status_code == 200
    body = response.json()
    assert not body["pipelinable"]
    assert "no-branching" in [d["rule"] for d in body["diagnostics"]]


def test_syntax_error_is_bad_request():
    response = client.post("/validate", json={"design": "loop:\n"})
    assert response.status_code == 400
    assert response.json()["detail"]["kind"] == "SyntaxError"


def test_pipeline():
    response = client.post("/pipeline", json={"design": design("fig1.ccdfg"), "interval": 1})
    assert response.status_code == 200
    body = response.json()
    assert (body["interval"], body["m"], body["depth"]) == (1, 2, 3)
    document = parse_ccdfg(body["document"])
    assert [s.label for s in document.design.fullstage] == ["Z@1+Y@2+X@3"]


def test_pipeline_hazard():
    response = client.post("/pipeline", json={"design": design("hazard.ccdfg"), "interval": 1})
    assert response.status_code == 422
    assert response.json()["detail"]["kind"] == "HazardConflict"


def test_pipeline_rejects_zero_interval():
    response = client.post("/pipeline", json={"design": design("fig1.ccdfg"), "interval": 0})
    assert response.status_code == 422


def test_check():
    response = client.post("/check", json={
        "design": design("prefix_sum.ccdfg"), "interval": 2, "mode": "invariant", "k_max": 3, "samples": 4,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["passed"]
    assert (body["total"], body["failures"]) == (12, 0)
    assert body["matrix"]["3"] == {"passed": 4, "total": 4}
    assert body["first_failure"] is None


def test_api_key(monkeypatch):
    monkeypatch.setattr(core, "API_KEY", "secret")
    payload = {"design": design("fig1.ccdfg")}
    assert client.post("/validate", json=payload).status_code == 401
    assert client.post("/validate", json=payload, headers={"X-API-KEY": "wrong"}).status_code == 401
    assert client.post("/validate", json=payload, headers={"X-API-KEY": "secret"}).status_code == 200
    # The health check stays open
    assert client.get("/").status_code == 200
