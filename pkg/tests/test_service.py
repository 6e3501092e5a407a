import json
import threading
import time

import pytest

pytest.importorskip("fastapi")
pytest.importorskip("httpx")
from fastapi.testclient import TestClient  # noqa: E402

from exchmine import service  # noqa: E402
from exchmine.cli import main  # noqa: E402
from exchmine.datasets import toy_clustering, toy_dataset, toy_path  # noqa: E402
from exchmine.patterns import mine_frequent  # noqa: E402
from exchmine.session import SessionConfig, SessionState, read_session, write_session  # noqa: E402


@pytest.fixture
def session_file(tmp_path):
    D = toy_dataset()
    state = SessionState(D, mine_frequent(D, 3, 4), clustering=toy_clustering(),
                         config=SessionConfig(samples=199, seed=3, adjust=False),
                         dataset_path=str(toy_path()))
    path = tmp_path / "session.json"
    write_session(state, path)
    return path


@pytest.fixture
def client(session_file):
    return TestClient(service.create_app(session_file))


def wait(client, job_id, timeout=60):
    end = time.time() + timeout
    while time.time() < end:
        r = client.get(f"/api/job/{job_id}")
        assert r.status_code == 200
        body = r.json()
        if body["status"] in ("done", "failed"):
            return body
        time.sleep(0.02)
    raise AssertionError("job did not finish")


def test_session_summary(client):
    r = client.get("/api/session")
    assert r.status_code == 200
    body = r.json()
    assert body["dataset"]["shape"] == [9, 8]
    assert len(body["mined"]) == 23
    assert body["constraints"] == [] and body["history"] == []
    assert r.content == client.get("/api/session").content


def test_margins_job_matches_cli(client, tmp_path, capsys):
    r = client.post("/api/test", json={"model": "margins"})
    assert r.status_code == 200
    job = wait(client, r.json()["job"])
    assert job["status"] == "done" and job["progress"] == 1.0
    out = tmp_path / "cli.json"
    assert main(["test", "--input", str(toy_path()), "--min-support", "3", "--max-size", "4",
                 "--samples", "199", "--seed", "3", "--no-fdr", "--report", str(out)]) == 0
    capsys.readouterr()
    cli = json.loads(out.read_text())
    assert job["report"] == cli
    assert [p["name"] for p in cli["patterns"] if p["significant"]] == \
        [p["name"] for p in job["report"]["patterns"] if p["significant"]]


def test_identical_state_gives_identical_bytes(session_file, tmp_path):
    copy = tmp_path / "copy.json"
    copy.write_bytes(session_file.read_bytes())
    bodies = []
    for path in (session_file, copy):
        c = TestClient(service.create_app(path))
        job_id = c.post("/api/test", json={"model": "cluster-margins", "params": {"samples": 49}}).json()["job"]
        wait(c, job_id)
        bodies.append(c.get(f"/api/job/{job_id}").content)
    assert bodies[0] == bodies[1]


def test_constraints_add_and_remove(client, session_file):
    r = client.post("/api/constraints", json={"add": ["AB"]})
    assert r.status_code == 200
    assert r.json()["constraints"] == [{"itemset": [0, 1], "label": "AB", "target": 3}]
    got = client.get("/api/session").json()["constraints"]
    assert got == [{"itemset": [0, 1], "label": "AB", "target": 3}]
    # persisted before the response
    assert [X.items for X in read_session(session_file).constraints] == [(0, 1)]
    r = client.post("/api/constraints", json={"add": ["B H"], "remove": ["AB"]})
    assert [c["label"] for c in r.json()["constraints"]] == ["BH"]


def test_error_codes(client):
    assert client.post("/api/constraints", json={"add": ["AZ"]}).status_code == 404
    assert client.post("/api/constraints", json={"remove": ["AB"]}).status_code == 404
    assert client.post("/api/constraints", json={"add": "AB"}).status_code == 400
    assert client.post("/api/constraints", content=b"{not json").status_code == 400
    assert client.post("/api/constraints", json=[1, 2]).status_code == 400
    assert client.get("/api/job/nope").status_code == 404
    assert client.post("/api/test", json={"model": "bogus"}).status_code == 400
    assert client.post("/api/test", json={"model": "itemset-soft"}).status_code == 400
    assert client.post("/api/test", json={"model": "margins", "params": {"samples": "x"}}).status_code == 400
    assert client.post("/api/iterate", json={"strategy": "random"}).status_code == 400


def test_second_job_gets_409(client, monkeypatch):
    release = threading.Event()
    real = service.test_patterns

    def slow(*args, **kwargs):
        release.wait(10)
        return real(*args, **kwargs)

    monkeypatch.setattr(service, "test_patterns", slow)
    first = client.post("/api/test", json={"model": "margins", "params": {"samples": 19}})
    assert first.status_code == 200
    second = client.post("/api/test", json={"model": "margins"})
    assert second.status_code == 409
    assert client.post("/api/iterate", json={}).status_code == 409
    assert client.post("/api/constraints", json={"add": ["AB"]}).status_code == 409
    # reads still work while the job runs
    assert client.get("/api/session").status_code == 200
    assert client.get(f"/api/job/{first.json()['job']}").json()["status"] in ("pending", "running")
    release.set()
    assert wait(client, first.json()["job"])["status"] == "done"
    assert client.post("/api/test", json={"model": "margins", "params": {"samples": 19}}).status_code == 200


def test_iterate_persists_records(client, session_file):
    r = client.post("/api/iterate", json={"strategy": "smallest-p", "params": {}})
    assert r.status_code == 200
    rec = r.json()
    assert rec["index"] == 0 and rec["model"] == {"kind": "margins"}
    assert rec["chosen_constraint"] is not None
    r = client.post("/api/iterate", json={"strategy": "manual"})
    assert r.json()["model"]["kind"] == "itemset-soft"
    state = read_session(session_file)
    assert [h.index for h in state.history] == [0, 1]
    assert json.loads(json.dumps(state.history[1].to_dict())) == r.json()
    assert len(client.get("/api/session").json()["history"]) == 2


def test_soft_job_uses_session_constraints(client):
    client.post("/api/constraints", json={"add": ["AB", "BH"]})
    r = client.post("/api/test", json={"model": "itemset-soft", "params": {"samples": 49, "swaps": 500, "w": 2}})
    job = wait(client, r.json()["job"])
    assert job["report"]["provenance"]["model"]["w"] == 2.0
    assert job["report"]["provenance"]["model"]["targets"] == [3, 3]


def test_static_files(session_file, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html>ok</html>")
    c = TestClient(service.create_app(session_file, static_dir=ui))
    assert c.get("/").text == "<html>ok</html>"
    assert c.get("/api/session").status_code == 200
