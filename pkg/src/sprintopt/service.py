"""HTTP facade over the engine.

Thin by design: routes translate JSON to engine calls and engine errors to
status codes with machine-readable ``detail.reason`` fields. Sprint runs go
to a background thread unless the caller asks to wait.
"""

from __future__ import annotations

import math
import threading
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .engine import Engine, EngineError, PrimingViolation, Sprint
from .space import MarginPolicy, SpaceError
from .trials import FidelitySpec, TrialStatus


class ThreadBody(BaseModel):
    name: str
    grouping: str = "GLOBAL"
    model_type: str = "Sim"
    variant: str = "Toy"
    objective: str = "multitask_sim"
    objective_seed: int = 0
    noise_sd: float = 0.0
    with_warmup: bool = False


class PrimingSpec(BaseModel):
    mode: str = Field(pattern="^(warm|cold)$")
    source: str
    top_n: int = 3
    override_init_mismatch: bool = False


class SprintBody(BaseModel):
    thread_id: str
    sampler: str = "gp"
    pruner: str = "none"
    fidelity: str | dict[str, Any] = "T1_V1_M25"
    space_version: int | None = None
    n_calls: int = 30
    n_random: int = 10
    seed: int = 0
    init_checkpoint: tuple[int, int] = (0, 0)
    suffix: str = "v1"
    priming: PrimingSpec | None = None


class PrimeBody(BaseModel):
    source: str
    mode: str = Field(pattern="^(warm|cold)$")
    top_n: int = 3
    override_init_mismatch: bool = False


class FreezeItem(BaseModel):
    dim: str
    value: Any = None


class PruneBody(BaseModel):
    k: int = 10
    freezes: list[FreezeItem] = Field(default_factory=list)
    margins: dict[str, float] | None = None


class RunBody(BaseModel):
    worker_limit: int = 1
    wait: bool = False


def _err(status: int, reason: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"reason": reason, "message": message})


def _fidelity_of(body: SprintBody) -> FidelitySpec:
    if isinstance(body.fidelity, str):
        return FidelitySpec.parse_designation(body.fidelity)
    return FidelitySpec(**body.fidelity)


def _sprint_summary(sprint: Sprint) -> dict[str, Any]:
    data = sprint.to_json()
    trials = data.pop("trials")
    data["n_trials"] = len(trials)
    data["n_complete"] = sum(1 for t in trials if t["status"] == "complete")
    data["n_pruned"] = sum(1 for t in trials if t["status"] == "pruned")
    data["n_failed"] = sum(1 for t in trials if t["status"] == "failed")
    return data


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="sprintopt", version="0.1.0")
    app.state.engine = engine
    run_lock = threading.Lock()
    accepted_runs: set[str] = set()

    def get_sprint(sprint_id: str) -> Sprint:
        try:
            return engine.sprint(sprint_id)
        except EngineError as exc:
            raise _err(404, "unknown-sprint", str(exc)) from None

    def get_thread(thread_id: str):
        try:
            return engine.thread(thread_id)
        except EngineError as exc:
            raise _err(404, "unknown-thread", str(exc)) from None

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/threads")
    def list_threads() -> list[dict[str, Any]]:
        return [t.to_json() for t in engine.threads.values()]

    @app.post("/threads", status_code=201)
    def create_thread(body: ThreadBody) -> dict[str, Any]:
        try:
            thread = engine.create_thread(
                name=body.name,
                grouping=body.grouping,
                model_type=body.model_type,
                variant=body.variant,
                objective=body.objective,
                objective_seed=body.objective_seed,
                noise_sd=body.noise_sd,
                with_warmup=body.with_warmup,
            )
        except (EngineError, SpaceError, ValueError) as exc:
            raise _err(422, "invalid-thread", str(exc)) from None
        return thread.to_json()

    @app.get("/threads/{thread_id}")
    def read_thread(thread_id: str) -> dict[str, Any]:
        return get_thread(thread_id).to_json()

    @app.get("/threads/{thread_id}/sprints")
    def thread_sprints(thread_id: str) -> list[dict[str, Any]]:
        thread = get_thread(thread_id)
        return [_sprint_summary(engine.sprint(sid)) for sid in thread.sprint_ids]

    @app.get("/threads/{thread_id}/space")
    def thread_space(thread_id: str, version: int | None = None) -> dict[str, Any]:
        get_thread(thread_id)
        try:
            return engine.space(thread_id, version).to_json()
        except EngineError as exc:
            raise _err(404, "unknown-space-version", str(exc)) from None

    @app.post("/sprints", status_code=201)
    def create_sprint(body: SprintBody) -> dict[str, Any]:
        get_thread(body.thread_id)
        try:
            fidelity = _fidelity_of(body)
        except ValueError as exc:
            raise _err(422, "invalid-sprint", str(exc)) from None
        if body.priming is not None:
            # validate before creating so an illegal request leaves no sprint behind
            get_sprint(body.priming.source)
            try:
                engine.check_priming(
                    body.thread_id,
                    fidelity,
                    tuple(body.init_checkpoint),
                    body.priming.source,
                    body.priming.mode,
                    override_init_mismatch=body.priming.override_init_mismatch,
                )
            except PrimingViolation as exc:
                raise _err(422, exc.reason, str(exc)) from None
        try:
            sprint = engine.create_sprint(
                body.thread_id,
                sampler=body.sampler,
                pruner=body.pruner,
                fidelity=fidelity,
                space_version=body.space_version,
                n_calls=body.n_calls,
                n_random=body.n_random,
                seed=body.seed,
                init_checkpoint=tuple(body.init_checkpoint),
                suffix=body.suffix,
            )
        except (EngineError, ValueError) as exc:
            raise _err(422, "invalid-sprint", str(exc)) from None
        if body.priming is not None:
            fn = engine.warm_prime if body.priming.mode == "warm" else engine.cold_prime
            fn(
                sprint.id,
                body.priming.source,
                body.priming.top_n,
                override_init_mismatch=body.priming.override_init_mismatch,
            )
        return _sprint_summary(engine.sprint(sprint.id))

    @app.get("/sprints/{sprint_id}")
    def read_sprint(sprint_id: str, consistent: bool = False) -> dict[str, Any]:
        sprint = get_sprint(sprint_id)
        if consistent and sprint.status == "running":
            raise _err(409, "running", f"sprint {sprint_id} is still running")
        return _sprint_summary(sprint)

    @app.get("/sprints/{sprint_id}/trials")
    def sprint_trials(
        sprint_id: str,
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict[str, Any]:
        sprint = get_sprint(sprint_id)
        chunk = sprint.trials[offset : offset + limit]
        return {"total": len(sprint.trials), "offset": offset, "trials": [t.to_json() for t in chunk]}

    @app.get("/sprints/{sprint_id}/space")
    def sprint_space(sprint_id: str) -> dict[str, Any]:
        sprint = get_sprint(sprint_id)
        return engine.sprint_space(sprint).to_json()

    @app.get("/sprints/{sprint_id}/dimensions/{dim_name}/scatter")
    def scatter(sprint_id: str, dim_name: str, k: int = Query(default=10, ge=1)) -> dict[str, Any]:
        sprint = get_sprint(sprint_id)
        space = engine.sprint_space(sprint)
        try:
            dim = space.dimension(dim_name)
        except SpaceError as exc:
            raise _err(404, "unknown-dimension", str(exc)) from None
        points = [
            {
                "trial_id": t.id,
                "value": t.point.values.get(dim_name),
                "score": t.final_score,
                "provenance": t.provenance.kind,
            }
            for t in sprint.trials
            if t.final_score is not None
        ]
        done = [
            t
            for t in sprint.trials
            if t.status is TrialStatus.COMPLETE and t.final_score is not None and math.isfinite(t.final_score)
        ]
        done.sort(key=lambda t: (t.final_score, t.id))
        hull: dict[str, Any] | None = None
        if len(done) >= k:
            top_values = [t.point.values.get(dim_name) for t in done[:k]]
            if dim.kind == "categorical":
                kept = {v for v in top_values}
                hull = {"categories": [c for c in dim.categories if c in kept]}
            else:
                hull = {"low": min(top_values), "high": max(top_values)}
        current = engine.space(sprint.thread_id).dimension(dim_name) if dim_name in engine.space(sprint.thread_id).names else None
        return {
            "dimension": {
                "name": dim.name,
                "kind": dim.kind,
                "low": dim.low,
                "high": dim.high,
                "categories": list(dim.categories) if dim.categories else None,
                "frozen": dim.is_frozen,
            },
            "points": points,
            "hull": hull,
            "current": None
            if current is None
            else {
                "low": current.low,
                "high": current.high,
                "categories": list(current.categories) if current.categories else None,
                "frozen": current.is_frozen,
            },
        }

    @app.post("/sprints/{sprint_id}/prime")
    def prime(sprint_id: str, body: PrimeBody) -> dict[str, Any]:
        target = get_sprint(sprint_id)
        get_sprint(body.source)
        if target.status != "pending":
            raise _err(409, "not-pending", f"sprint {sprint_id} is {target.status}")
        try:
            fn = engine.warm_prime if body.mode == "warm" else engine.cold_prime
            n = fn(sprint_id, body.source, body.top_n, override_init_mismatch=body.override_init_mismatch)
        except PrimingViolation as exc:
            raise _err(422, exc.reason, str(exc)) from None
        return {"mode": body.mode, "imported": n}

    @app.post("/sprints/{sprint_id}/prune")
    def prune(sprint_id: str, body: PruneBody) -> dict[str, Any]:
        sprint = get_sprint(sprint_id)
        if sprint.status == "running":
            raise _err(409, "running", f"sprint {sprint_id} is still running")
        n_done = sum(
            1
            for t in sprint.trials
            if t.status is TrialStatus.COMPLETE and t.final_score is not None and math.isfinite(t.final_score)
        )
        if n_done < body.k:
            raise _err(422, "insufficient-trials", f"need >= {body.k} completed trials, have {n_done}")
        margins = MarginPolicy(**body.margins) if body.margins else None
        freezes = [(f.dim, f.value) for f in body.freezes]
        try:
            space = engine.prune_space(sprint_id, body.k, margins=margins, freezes=freezes)
        except (EngineError, SpaceError) as exc:
            raise _err(422, "invalid-prune", str(exc)) from None
        return space.to_json()

    @app.post("/sprints/{sprint_id}/run")
    def run(sprint_id: str, body: RunBody | None = None) -> Any:
        from fastapi.responses import JSONResponse

        body = body or RunBody()
        sprint = get_sprint(sprint_id)
        with run_lock:
            if sprint.status != "pending" or sprint_id in accepted_runs:
                status = "running" if sprint_id in accepted_runs and sprint.status == "pending" else sprint.status
                raise _err(409, "not-pending", f"sprint {sprint_id} is {status}")
            siblings = engine.thread(sprint.thread_id).sprint_ids
            for sid in siblings:
                if sid != sprint_id and (engine.sprint(sid).status == "running" or sid in accepted_runs and engine.sprint(sid).status == "pending"):
                    raise _err(409, "thread-busy", f"sprint {sid} in thread {sprint.thread_id} is still running")
            accepted_runs.add(sprint_id)
        if body.wait:
            engine.run_sprint(sprint_id, worker_limit=body.worker_limit)
            return _sprint_summary(engine.sprint(sprint_id))

        def target() -> None:
            try:
                engine.run_sprint(sprint_id, worker_limit=body.worker_limit)
            except Exception:
                import logging

                logging.getLogger(__name__).exception("sprint %s run crashed", sprint_id)

        threading.Thread(target=target, daemon=True).start()
        return JSONResponse(status_code=202, content={"status": "started", "sprint_id": sprint_id})

    return app


def serve(store_root: str, host: str = "127.0.0.1", port: int = 8361) -> None:
    import uvicorn

    uvicorn.run(create_app(Engine(store_root)), host=host, port=port)
