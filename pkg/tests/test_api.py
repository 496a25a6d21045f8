import pytest
from fastapi.testclient import TestClient

from talbot import __version__
from talbot.main import app
from talbot.services.runner import RunManifest, record_run
from talbot.services.storage import Artifact


def _manifest(name, status="partial", wall_time=12.5):
    return RunManifest(
        name=name,
        config_hash="0" * 64,
        software_version=__version__,
        output_dir=f"runs/{name}",
        status=status,
        wall_time=wall_time,
        constants={},
        frame={},
        lattice={},
        solver={},
        points=[
            {"index": 0, "label": "E00", "role": "sweep", "parameters": {"E0": 0.0}, "status": "ok", "error": None, "wall_time": 5.0},
            {
                "index": 1,
                "label": "E01",
                "role": "sweep",
                "parameters": {"E0": 100.0},
                "status": "failed",
                "error": "NumericalFailure: non-finite value (step 3)",
                "wall_time": 1.5,
            },
        ],
        artifacts=[
            Artifact("observables.csv", "observables", 120, "a" * 64),
            Artifact("profiles/point_000_1LT.csv", "profile", 80, "b" * 64),
        ],
        created_at="2026-01-01T00:00:00+00:00",
    )


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


@pytest.fixture
def recorded(client, tmp_path):
    run_id = record_run(_manifest("api-run"), tmp_path / "manifest.json")
    assert run_id is not None
    return run_id


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "version": __version__}


def test_list_runs_filters_by_name_and_status(client, recorded):
    response = client.get("/runs/", params={"name": "api-run"})
    assert response.status_code == 200
    runs = response.json()
    assert runs and all(r["name"] == "api-run" for r in runs)
    assert runs[0]["id"] == recorded
    assert runs[0]["point_count"] == 2 and runs[0]["failed_count"] == 1
    assert client.get("/runs/", params={"name": "api-run", "status": "ok"}).json() == []


def test_run_detail_lists_points(client, recorded):
    body = client.get(f"/runs/{recorded}").json()
    assert body["status"] == "partial"
    assert [p["label"] for p in body["points"]] == ["E00", "E01"]
    assert body["points"][1]["error"].startswith("NumericalFailure")


def test_missing_run_is_404(client):
    response = client.get("/runs/999999")
    assert response.status_code == 404
    assert response.json()["detail"] == "Run not found"


def test_artifacts_filter_by_kind(client, recorded):
    every = client.get(f"/runs/{recorded}/artifacts").json()
    assert [a["path"] for a in every] == ["observables.csv", "profiles/point_000_1LT.csv"]
    profiles = client.get(f"/runs/{recorded}/artifacts", params={"kind": "profile"}).json()
    assert [a["kind"] for a in profiles] == ["profile"]


def test_summary_counts_the_ledger(client, tmp_path):
    before = client.get("/summary").json()
    record_run(_manifest("slowest-run", status="failed", wall_time=1e6), tmp_path / "manifest.json")
    after = client.get("/summary").json()
    assert after["runs"] == before["runs"] + 1
    assert after["points"] == before["points"] + 2
    assert after["failed_points"] == before["failed_points"] + 1
    assert after["artifact_bytes"] == before["artifact_bytes"] + 200
    assert after["slowest"][0]["name"] == "slowest-run"
