"""Local HTTP API over one session file, for the browser UI.

One mutation at a time: a running test job, an iteration or a constraint
edit holds the session lock and concurrent writers get 409. Every mutation
is written to the session file (atomically) before the response returns.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response

from .errors import SessionComplete, UsageError
from .nullmodels import ChainConfig, NullModel
from .patterns import parse_itemset_label
from .session import (SessionState, add_constraints, iterate_manual, iterate_smallest_p,
                      read_session, remove_constraints, write_session)
from .significance import support_statistics, test_patterns

MODELS = ("margins", "cluster-margins", "itemset-soft")


def _json(data: Any, status: int = 200) -> Response:
    body = json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
    return Response(body, status_code=status, media_type="application/json")


def session_summary(state: SessionState) -> dict:
    D = state.dataset
    names = D.col_names()
    return {
        "dataset": {"shape": list(D.shape), "n_ones": D.n_ones, "path": state.dataset_path,
                    "col_labels": names},
        "config": dataclasses.asdict(state.config),
        "mined": [{"itemset": list(X.items), "label": X.label(names), "frequency": f}
                  for X, f in state.mined.items()],
        "constraints": [{"itemset": list(X.items), "label": X.label(names), "target": f}
                        for X, f in state.constraints.items()],
        "clustering": None if state.clustering is None else list(state.clustering.assignment),
        "history": [rec.to_dict() for rec in state.history],
    }


class _Job:
    def __init__(self, job_id: str, total: int):
        self.id = job_id
        self.status = "pending"
        self.done = 0
        self.total = total
        self.report = None
        self.error = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "status": self.status,
             "progress": self.done / self.total if self.total else 0.0}
        if self.report is not None:
            d["report"] = self.report.to_dict()
        if self.error is not None:
            d["error"] = self.error
        return d


class SessionService:
    def __init__(self, session_path):
        self.path = Path(session_path)
        self.state = read_session(self.path)
        self.lock = threading.Lock()
        self.jobs: dict[str, _Job] = {}
        self._ids = itertools.count(1)
        self.threads: list[threading.Thread] = []

    def commit(self, state: SessionState):
        write_session(state, self.path)
        self.state = state

    def parse_labels(self, labels):
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise HTTPException(400, "expected a list of itemset labels")
        names = self.state.dataset.col_names()
        try:
            return [parse_itemset_label(lab, names) for lab in labels]
        except KeyError as exc:
            raise HTTPException(404, f"unknown itemset {exc.args[0]!r}") from None

    def build_model(self, kind: str, params: dict) -> NullModel:
        st = self.state
        if kind == "margins":
            return NullModel.margins()
        if kind == "cluster-margins":
            if st.clustering is None:
                raise HTTPException(400, "session has no clustering")
            return NullModel.cluster_margins(st.clustering)
        if kind == "itemset-soft":
            if len(st.constraints) == 0:
                raise HTTPException(400, "itemset-soft needs at least one constraint")
            return NullModel.itemset_soft(st.constraints, float(params.get("w", st.config.w)))
        raise HTTPException(400, f"model must be one of {MODELS}")

    def start_test(self, body: dict) -> _Job:
        params = body.get("params") or {}
        if not isinstance(params, dict):
            raise HTTPException(400, "params must be an object")
        model = self.build_model(body.get("model"), params)
        cfg = self.state.config
        try:
            chain = ChainConfig(int(params.get("samples", cfg.samples)),
                                params.get("swaps", cfg.swap_attempts),
                                int(params.get("seed", cfg.seed)))
            alpha = float(params.get("alpha", cfg.alpha))
            adjust = bool(params.get("adjust", cfg.adjust))
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from None
        if not self.lock.acquire(blocking=False):
            raise HTTPException(409, "a job is already running")
        job = _Job(str(next(self._ids)), chain.samples)
        self.jobs[job.id] = job
        state = self.state

        def progress(done, total):
            job.done = done

        def run():
            try:
                job.status = "running"
                job.report = test_patterns(state.dataset, support_statistics(state.mined), model,
                                           chain, alpha=alpha, adjust=adjust, progress=progress)
                job.done = job.total
                job.status = "done"
            except Exception as exc:  # noqa: BLE001 - reported through the job
                job.error = str(exc)
                job.status = "failed"
            finally:
                self.lock.release()

        t = threading.Thread(target=run, name=f"exchmine-job-{job.id}", daemon=True)
        self.threads.append(t)
        t.start()
        return job


def create_app(session_path, static_dir=None) -> FastAPI:
    svc = SessionService(session_path)
    app = FastAPI(title="exchmine")
    app.state.service = svc

    async def body_of(request: Request) -> dict:
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise HTTPException(400, "malformed JSON body") from None
        if not isinstance(body, dict):
            raise HTTPException(400, "expected a JSON object")
        return body

    @app.get("/api/session")
    def get_session():
        return _json(session_summary(svc.state))

    @app.post("/api/test")
    async def post_test(request: Request):
        job = svc.start_test(await body_of(request))
        return _json({"job": job.id})

    @app.get("/api/job/{job_id}")
    def get_job(job_id: str):
        job = svc.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return _json(job.to_dict())

    @app.post("/api/constraints")
    async def post_constraints(request: Request):
        body = await body_of(request)
        add = svc.parse_labels(body.get("add", []))
        remove = svc.parse_labels(body.get("remove", []))
        if not svc.lock.acquire(blocking=False):
            raise HTTPException(409, "a job is already running")
        try:
            state = add_constraints(svc.state, add)
            try:
                state = remove_constraints(state, remove)
            except KeyError:
                raise HTTPException(404, "itemset is not a constraint") from None
            svc.commit(state)
        finally:
            svc.lock.release()
        return _json({"constraints": session_summary(svc.state)["constraints"]})

    @app.post("/api/iterate")
    async def post_iterate(request: Request):
        body = await body_of(request)
        strategy = body.get("strategy", "smallest-p")
        if strategy not in ("smallest-p", "manual"):
            raise HTTPException(400, "strategy must be 'smallest-p' or 'manual'")
        if not svc.lock.acquire(blocking=False):
            raise HTTPException(409, "a job is already running")
        try:
            step = iterate_smallest_p if strategy == "smallest-p" else iterate_manual
            try:
                state = step(svc.state)
            except SessionComplete as exc:
                raise HTTPException(400, str(exc)) from None
            except UsageError as exc:
                raise HTTPException(400, str(exc)) from None
            svc.commit(state)
        finally:
            svc.lock.release()
        return _json(svc.state.history[-1].to_dict())

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
