"""Sprint orchestration: threads, sprints, priming legality, rotation
policy, the sampler/pruner run loop, and the three-phase baseline flow.

All state changes are event-sourced through the store: the engine applies
every event to its in-memory registry through the same code path used when
replaying a log after a crash, so a rebuilt engine is indistinguishable
from the one that wrote the log.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import testbed
from .gp import gp_minimize
from .hyperband import HyperbandConfig, RungRecord, derive_config, should_prune
from .space import (
    HPoint,
    MarginPolicy,
    SearchSpace,
    contains,
    freeze_dimension,
    prune_to_top_k,
    unfreeze_dimension,
)
from .store import EventStore
from .tpe import TPEConfig, tpe_suggest
from .trials import (
    FidelitySpec,
    ObjectiveHandle,
    Provenance,
    Reporter,
    SprintResult,
    Trial,
    TrialPruned,
    TrialStatus,
    incumbent,
)

SAMPLERS = ("gp", "tpe")
PRUNERS = ("none", "hyperband")
# Epoch count the lr schedule is designed for. Capping a sprint below it with
# the scheduler enabled compresses the schedule (the effective decay rate
# changes), so such sprints must declare an early-stop mode instead.
SCHEDULE_DESIGN_EPOCHS = 25


class EngineError(RuntimeError):
    """Invalid engine operation (unknown ids, bad state transitions)."""


class PrimingViolation(EngineError):
    """Priming rejected; ``reason`` is machine-readable."""

    REASONS = ("fidelity-mismatch", "thread-isolation", "init-mismatch")

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        if reason not in self.REASONS:
            raise ValueError(f"unknown priming violation reason {reason!r}")
        self.reason = reason


# --- sprint nomenclature ----------------------------------------------------


@dataclass(frozen=True)
class SprintNameParts:
    model_type: str
    variant: str
    grouping: str
    fidelity: FidelitySpec
    checkpoint: tuple[int, int] = (0, 0)
    suffix: str = "v1"


def sprint_name(parts: SprintNameParts) -> str:
    """Render 'ModelType.Variant.Grouping.T{kT}_V{kV}_M{E}.E{e}_S{s}.suffix'.
    Free-text parts must not contain '.', the separator."""
    free = (parts.model_type, parts.variant, parts.grouping, parts.suffix)
    for part in free:
        if "." in part:
            raise EngineError(f"name part {part!r} contains '.'")
    if not all(p for p in free[:3]):
        raise EngineError("model_type, variant and grouping must be non-empty")
    e, s = parts.checkpoint
    return ".".join(
        [parts.model_type, parts.variant, parts.grouping, parts.fidelity.designation(), f"E{e}_S{s}", parts.suffix]
    )


def parse_sprint_name(name: str) -> SprintNameParts:
    parts = name.split(".")
    if len(parts) != 6:
        raise EngineError(f"sprint name must have 6 dot-separated parts, got {len(parts)}: {name!r}")
    model_type, variant, grouping, fid_text, cp_text, suffix = parts
    m = re.fullmatch(r"E(\d+)_S(\d+)", cp_text)
    if not m:
        raise EngineError(f"bad checkpoint part {cp_text!r}")
    return SprintNameParts(
        model_type=model_type,
        variant=variant,
        grouping=grouping,
        fidelity=FidelitySpec.parse_designation(fid_text),
        checkpoint=(int(m.group(1)), int(m.group(2))),
        suffix=suffix,
    )


# --- subset rotation --------------------------------------------------------


def rotate_subset(n_items: int, denominator: int, rotation_index: int, salt: int = 0) -> np.ndarray:
    """Deterministic rotating 1/denominator subset: a fixed seed-shuffled
    permutation is split into ``denominator`` contiguous chunks whose sizes
    differ by at most one; rotation_index selects a chunk modulo the
    denominator. Every item belongs to exactly one chunk."""
    if denominator < 1:
        raise EngineError(f"denominator must be >= 1, got {denominator}")
    if n_items < denominator:
        raise EngineError(f"cannot split {n_items} items into {denominator} subsets")
    perm = np.random.default_rng([salt, n_items, denominator]).permutation(n_items)
    chunks = np.array_split(perm, denominator)
    return np.sort(chunks[rotation_index % denominator])


# --- registry types ---------------------------------------------------------


@dataclass
class Thread:
    id: str
    name: str
    model_type: str
    variant: str
    grouping: str
    model_config_id: str
    objective: str
    objective_seed: int
    noise_sd: float
    sprint_ids: list[str] = field(default_factory=list)
    space_versions: list[int] = field(default_factory=list)
    current_space_version: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "model_type": self.model_type,
            "variant": self.variant,
            "grouping": self.grouping,
            "model_config_id": self.model_config_id,
            "objective": self.objective,
            "objective_seed": self.objective_seed,
            "noise_sd": self.noise_sd,
            "sprint_ids": list(self.sprint_ids),
            "space_versions": list(self.space_versions),
            "current_space_version": self.current_space_version,
        }


@dataclass
class Sprint:
    id: str
    thread_id: str
    name: str
    sampler: str
    pruner: str
    space_version: int
    fidelity: FidelitySpec
    init_checkpoint: tuple[int, int]
    n_calls: int
    n_random: int
    seed: int
    status: str = "pending"  # pending | running | complete | failed
    hyperband: HyperbandConfig | None = None
    tpe: TPEConfig | None = None
    trials: list[Trial] = field(default_factory=list)
    primed_queue: list[tuple[HPoint, Provenance]] = field(default_factory=list)
    n_imported: int = 0
    best_trial_id: int | None = None

    def trial_by_id(self, trial_id: int) -> Trial | None:
        for t in self.trials:
            if t.id == trial_id:
                return t
        return None

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "thread_id": self.thread_id,
            "name": self.name,
            "sampler": self.sampler,
            "pruner": self.pruner,
            "space_version": self.space_version,
            "fidelity": self.fidelity.to_json(),
            "init_checkpoint": list(self.init_checkpoint),
            "n_calls": self.n_calls,
            "n_random": self.n_random,
            "seed": self.seed,
            "status": self.status,
            "hyperband": (
                None
                if self.hyperband is None
                else {
                    "max_resource": self.hyperband.max_resource,
                    "eta": self.hyperband.eta,
                    "s_max": self.hyperband.s_max,
                    "budget": self.hyperband.budget,
                }
            ),
            "tpe": (
                None
                if self.tpe is None
                else {"gamma": self.tpe.gamma, "n_candidates": self.tpe.n_candidates, "n_startup": self.tpe.n_startup}
            ),
            "n_imported": self.n_imported,
            "best_trial_id": self.best_trial_id,
            "trials": [t.to_json() for t in self.trials],
        }


class Engine:
    """Event-sourced orchestrator over one store directory."""

    def __init__(self, store_root: str, train_stride: int = 10):
        self.store = EventStore(store_root)
        self.train_stride = train_stride
        self.threads: dict[str, Thread] = {}
        self.sprints: dict[str, Sprint] = {}
        self.spaces: dict[tuple[str, int], SearchSpace] = {}
        self.rungs: dict[tuple[str, int], list[RungRecord]] = {}
        self._lock = threading.RLock()
        self._objectives: dict[str, ObjectiveHandle] = {}
        self._replay()

    # --- event plumbing ----------------------------------------------------
    def _emit(self, thread_id: str, kind: str, payload: dict[str, Any]) -> None:
        with self._lock:
            self.store.append(thread_id, kind, payload)
            self._apply({"kind": kind, **payload})

    def _replay(self) -> None:
        for tid in self.store.thread_ids():
            for event in self.store.events(tid):
                self._apply(event)
        # a crash can leave a sprint marked running; surface it as pending-like
        for sprint in self.sprints.values():
            if sprint.status == "running":
                sprint.status = "interrupted"

    def _apply(self, event: dict[str, Any]) -> None:
        kind = event["kind"]
        if kind == "thread-created":
            space = SearchSpace.from_json(event["space"])
            thread = Thread(
                id=event["thread_id"],
                name=event["name"],
                model_type=event["model_type"],
                variant=event["variant"],
                grouping=event["grouping"],
                model_config_id=event["model_config_id"],
                objective=event["objective"],
                objective_seed=event["objective_seed"],
                noise_sd=event["noise_sd"],
                space_versions=[space.version],
            )
            thread.current_space_version = space.version
            self.threads[thread.id] = thread
            self.spaces[(thread.id, space.version)] = space
        elif kind == "space-edited":
            space = SearchSpace.from_json(event["space"])
            tid = event["thread_id"]
            self.spaces[(tid, space.version)] = space
            self.threads[tid].space_versions.append(space.version)
            self.threads[tid].current_space_version = space.version
        elif kind == "sprint-created":
            hb = event.get("hyperband")
            tp = event.get("tpe")
            sprint = Sprint(
                id=event["sprint_id"],
                thread_id=event["thread_id"],
                name=event["name"],
                sampler=event["sampler"],
                pruner=event["pruner"],
                space_version=event["space_version"],
                fidelity=FidelitySpec.from_json(event["fidelity"]),
                init_checkpoint=tuple(event["init_checkpoint"]),
                n_calls=event["n_calls"],
                n_random=event["n_random"],
                seed=event["seed"],
                hyperband=HyperbandConfig(**hb) if hb else None,
                tpe=TPEConfig(**tp) if tp else None,
            )
            self.sprints[sprint.id] = sprint
            self.threads[sprint.thread_id].sprint_ids.append(sprint.id)
        elif kind == "sprint-primed":
            sprint = self.sprints[event["sprint_id"]]
            if event["mode"] == "warm":
                for tj in event["imported"]:
                    sprint.trials.append(Trial.from_json(tj))
                sprint.n_imported += len(event["imported"])
            else:
                for pj, prov in event["queued"]:
                    sprint.primed_queue.append((HPoint.from_json(pj), Provenance.from_json(prov)))
        elif kind == "sprint-started":
            self.sprints[event["sprint_id"]].status = "running"
        elif kind == "trial-started":
            sprint = self.sprints[event["sprint_id"]]
            tj = event["trial"]
            trial = Trial(
                id=tj["id"],
                point=HPoint.from_json(tj["point"]),
                status=TrialStatus.RUNNING,
                provenance=Provenance.from_json(tj["provenance"]),
                seed=tj["seed"],
            )
            existing = sprint.trial_by_id(trial.id)
            if existing is None:
                sprint.trials.append(trial)
        elif kind == "tick":
            sprint = self.sprints[event["sprint_id"]]
            record = RungRecord(
                trial_id=event["trial_id"],
                resource=event["resource"],
                score=event["score"],
                prunable=event["prunable"],
            )
            trial = sprint.trial_by_id(event["trial_id"])
            if trial is not None:
                trial.intermediate.append(record)
            if record.prunable:
                self.rungs.setdefault((sprint.id, record.resource), []).append(record)
        elif kind == "trial-finished":
            sprint = self.sprints[event["sprint_id"]]
            finished = Trial.from_json(event["trial"])
            existing = sprint.trial_by_id(finished.id)
            if existing is None:
                sprint.trials.append(finished)
            else:
                sprint.trials[sprint.trials.index(existing)] = finished
        elif kind == "sprint-finished":
            sprint = self.sprints[event["sprint_id"]]
            sprint.status = event["status"]
            sprint.best_trial_id = event["best_trial_id"]
        else:
            raise EngineError(f"unknown event kind {kind!r}")

    # --- lookups ------------------------------------------------------------
    def thread(self, thread_id: str) -> Thread:
        try:
            return self.threads[thread_id]
        except KeyError:
            raise EngineError(f"unknown thread {thread_id!r}") from None

    def sprint(self, sprint_id: str) -> Sprint:
        try:
            return self.sprints[sprint_id]
        except KeyError:
            raise EngineError(f"unknown sprint {sprint_id!r}") from None

    def space(self, thread_id: str, version: int | None = None) -> SearchSpace:
        thread = self.thread(thread_id)
        v = thread.current_space_version if version is None else version
        try:
            return self.spaces[(thread_id, v)]
        except KeyError:
            raise EngineError(f"thread {thread_id!r} has no space version {v}") from None

    def sprint_space(self, sprint: Sprint) -> SearchSpace:
        return self.space(sprint.thread_id, sprint.space_version)

    def objective_for(self, thread_id: str) -> ObjectiveHandle:
        thread = self.thread(thread_id)
        if thread_id not in self._objectives:
            base = self.space(thread_id, thread.space_versions[0])
            self._objectives[thread_id] = testbed.make_objective(
                thread.objective, base, seed=thread.objective_seed, noise_sd=thread.noise_sd
            )
        return self._objectives[thread_id]

    def sprint_snapshot(self, sprint_id: str) -> dict[str, Any]:
        return self.sprint(sprint_id).to_json()

    # --- thread / space ops --------------------------------------------------
    def create_thread(
        self,
        name: str,
        grouping: str = "GLOBAL",
        model_type: str = "Sim",
        variant: str = "Toy",
        objective: str = "multitask_sim",
        objective_seed: int = 0,
        noise_sd: float = 0.0,
        space: SearchSpace | None = None,
        with_warmup: bool = False,
        model_config_id: str | None = None,
    ) -> Thread:
        from .losses import grouping_space

        if space is None:
            space = grouping_space(grouping, name=f"{name}-space", with_warmup=with_warmup)
        thread_id = f"th{len(self.threads) + 1:03d}"
        self._emit(
            thread_id,
            "thread-created",
            {
                "thread_id": thread_id,
                "name": name,
                "model_type": model_type,
                "variant": variant,
                "grouping": grouping,
                "model_config_id": model_config_id or f"{model_type}.{variant}.{grouping}".replace(".", "/"),
                "objective": objective,
                "objective_seed": objective_seed,
                "noise_sd": noise_sd,
                "space": space.to_json(),
            },
        )
        self._write_space_snapshot(thread_id, space)
        return self.thread(thread_id)

    def _register_space(self, thread_id: str, space: SearchSpace) -> SearchSpace:
        self._emit(
            thread_id,
            "space-edited",
            {
                "thread_id": thread_id,
                "space": space.to_json(),
                "rule": space.audit_rule,
                "degenerate": list(space.degenerate_dims),
            },
        )
        self._write_space_snapshot(thread_id, space)
        return self.space(thread_id, space.version)

    def _write_space_snapshot(self, thread_id: str, space: SearchSpace) -> None:
        self.store.write_snapshot(f"space-{thread_id}-v{space.version}", space.to_json())

    def prune_space(
        self,
        sprint_id: str,
        k: int,
        margins: MarginPolicy | None = None,
        freezes: Sequence[tuple[str, Any]] = (),
    ) -> SearchSpace:
        """Shrink the sprint's space to its top-k hull (plus margins) and
        register the new version on the thread; optional freezes follow as
        separate audited edits."""
        sprint = self.sprint(sprint_id)
        if sprint.status == "running":
            raise EngineError(f"sprint {sprint_id} is running; prune afterwards")
        space = self.sprint_space(sprint)
        current = self.space(sprint.thread_id)
        base = replace(space, version=current.version) if space.version != current.version else space
        pruned = prune_to_top_k(base, sprint.trials, k, margins)
        out = self._register_space(sprint.thread_id, pruned)
        for dim_name, value in freezes:
            out = self._register_space(sprint.thread_id, freeze_dimension(out, dim_name, value))
        return out

    # --- sprint ops -----------------------------------------------------------
    def create_sprint(
        self,
        thread_id: str,
        sampler: str = "gp",
        pruner: str = "none",
        fidelity: FidelitySpec = FidelitySpec(),
        space_version: int | None = None,
        n_calls: int = 30,
        n_random: int = 10,
        seed: int = 0,
        init_checkpoint: tuple[int, int] = (0, 0),
        suffix: str = "v1",
        eta: int = 3,
        tpe_config: TPEConfig | None = None,
    ) -> Sprint:
        thread = self.thread(thread_id)
        if sampler not in SAMPLERS:
            raise EngineError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
        if pruner not in PRUNERS:
            raise EngineError(f"pruner must be one of {PRUNERS}, got {pruner!r}")
        if n_calls < 1:
            raise EngineError("n_calls must be >= 1")
        if (
            fidelity.scheduler_enabled
            and fidelity.max_epochs < SCHEDULE_DESIGN_EPOCHS
            and fidelity.early_stop == "none"
        ):
            raise EngineError(
                f"scheduler compression: max_epochs {fidelity.max_epochs} is below the "
                f"schedule design length {SCHEDULE_DESIGN_EPOCHS}; disable the scheduler "
                "or set an early_stop mode"
            )
        version = thread.current_space_version if space_version is None else space_version
        if (thread_id, version) not in self.spaces:
            raise EngineError(f"thread {thread_id!r} has no space version {version}")
        name = sprint_name(
            SprintNameParts(
                model_type=thread.model_type,
                variant=thread.variant,
                grouping=thread.grouping,
                fidelity=fidelity,
                checkpoint=init_checkpoint,
                suffix=suffix,
            )
        )
        hb = None
        if pruner == "hyperband":
            # R auto: training budget plus calibration epochs
            hb = derive_config(fidelity.max_epochs + fidelity.calibration_epochs, eta)
        sprint_id = f"sp{len(self.sprints) + 1:04d}"
        self._emit(
            thread_id,
            "sprint-created",
            {
                "sprint_id": sprint_id,
                "thread_id": thread_id,
                "name": name,
                "sampler": sampler,
                "pruner": pruner,
                "space_version": version,
                "fidelity": fidelity.to_json(),
                "init_checkpoint": list(init_checkpoint),
                "n_calls": n_calls,
                "n_random": n_random,
                "seed": seed,
                "hyperband": None
                if hb is None
                else {"max_resource": hb.max_resource, "eta": hb.eta, "s_max": hb.s_max, "budget": hb.budget},
                "tpe": None
                if tpe_config is None
                else {
                    "gamma": tpe_config.gamma,
                    "n_candidates": tpe_config.n_candidates,
                    "n_startup": tpe_config.n_startup,
                },
            },
        )
        return self.sprint(sprint_id)

    # --- priming ---------------------------------------------------------------
    def check_priming(
        self,
        thread_id: str,
        fidelity: FidelitySpec,
        init_checkpoint: tuple[int, int],
        source_id: str,
        mode: str,
        *,
        target_label: str = "target",
        override_init_mismatch: bool = False,
    ) -> None:
        """Raise PrimingViolation when a sprint with the given identity could
        not legally prime from ``source_id``. Usable before the target sprint
        exists (the service pre-validates creation payloads with it)."""
        source = self.sprint(source_id)
        if thread_id != source.thread_id:
            raise PrimingViolation(
                "thread-isolation",
                f"sprints {target_label} and {source.id} belong to different threads",
            )
        if mode == "warm" and fidelity != source.fidelity:
            raise PrimingViolation(
                "fidelity-mismatch",
                f"warm priming requires identical fidelity: {fidelity.designation()} != {source.fidelity.designation()}",
            )
        if tuple(init_checkpoint) != source.init_checkpoint and not override_init_mismatch:
            raise PrimingViolation(
                "init-mismatch",
                f"init checkpoints differ: {tuple(init_checkpoint)} != {source.init_checkpoint}",
            )

    def _priming_checks(
        self, target: Sprint, source: Sprint, *, require_fidelity: bool, override_init_mismatch: bool
    ) -> None:
        self.check_priming(
            target.thread_id,
            target.fidelity,
            target.init_checkpoint,
            source.id,
            "warm" if require_fidelity else "cold",
            target_label=target.id,
            override_init_mismatch=override_init_mismatch,
        )

    def _source_top(self, target: Sprint, source: Sprint, top_n: int) -> list[Trial]:
        space = self.sprint_space(target)
        done = [t for t in source.trials if t.status is TrialStatus.COMPLETE and t.final_score is not None]
        done.sort(key=lambda t: (t.final_score, t.id))
        return [t for t in done if contains(space, t.point)][:top_n]

    def warm_prime(self, target_id: str, source_id: str, top_n: int, override_init_mismatch: bool = False) -> int:
        """Copy the source's best completed trials (scores included) into the
        target. Requires same thread, identical fidelity and init checkpoint;
        points outside the target's space are skipped."""
        target, source = self.sprint(target_id), self.sprint(source_id)
        if target.status != "pending":
            raise EngineError(f"can only prime a pending sprint, {target_id} is {target.status}")
        self._priming_checks(target, source, require_fidelity=True, override_init_mismatch=override_init_mismatch)
        picked = self._source_top(target, source, top_n)
        imported = []
        next_id = len(target.trials)
        for offset, src_trial in enumerate(picked):
            record = Trial(
                id=next_id + offset,
                point=src_trial.point,
                status=TrialStatus.COMPLETE,
                final_score=src_trial.final_score,
                intermediate=list(src_trial.intermediate),
                provenance=Provenance(kind="warm_primed", source_sprint=source.id, source_trial=src_trial.id),
                seed=src_trial.seed,
            )
            imported.append(record.to_json())
        self._emit(
            target.thread_id,
            "sprint-primed",
            {"sprint_id": target.id, "mode": "warm", "source_sprint": source.id, "imported": imported},
        )
        return len(imported)

    def cold_prime(self, target_id: str, source_id: str, top_n: int, override_init_mismatch: bool = False) -> int:
        """Queue the source's best points for re-evaluation under the
        target's own fidelity. Scores are never copied. Fidelity may differ;
        threads may not."""
        target, source = self.sprint(target_id), self.sprint(source_id)
        if target.status != "pending":
            raise EngineError(f"can only prime a pending sprint, {target_id} is {target.status}")
        self._priming_checks(target, source, require_fidelity=False, override_init_mismatch=override_init_mismatch)
        picked = self._source_top(target, source, top_n)
        queued = [
            [
                t.point.to_json(),
                Provenance(kind="cold_primed", source_sprint=source.id, source_trial=t.id).to_json(),
            ]
            for t in picked
        ]
        self._emit(
            target.thread_id,
            "sprint-primed",
            {"sprint_id": target.id, "mode": "cold", "source_sprint": source.id, "queued": queued},
        )
        return len(queued)

    # --- running -----------------------------------------------------------------
    def _make_reporter(self, sprint: Sprint, trial: Trial) -> Reporter:
        def report(epoch: int, score: float, prunable: bool) -> bool:
            self._emit(
                sprint.thread_id,
                "tick",
                {
                    "sprint_id": sprint.id,
                    "trial_id": trial.id,
                    "resource": epoch,
                    "score": score,
                    "prunable": prunable,
                },
            )
            trial.intermediate.append(RungRecord(trial.id, epoch, score, prunable))
            if prunable and sprint.pruner == "hyperband":
                eta = sprint.hyperband.eta if sprint.hyperband else 3
                with self._lock:
                    peers = [r.score for r in self.rungs.get((sprint.id, epoch), [])]
                if should_prune(peers, score, eta):
                    raise TrialPruned(epoch, score)
            return True

        return report

    def run_sprint(
        self, sprint_id: str, objective: ObjectiveHandle | None = None, worker_limit: int = 1
    ) -> SprintResult:
        """Execute the sprint's budget with its sampler and pruner. Failures
        are recorded and skipped by the samplers; a failure rate above 50%
        fails the whole sprint (history preserved)."""
        sprint = self.sprint(sprint_id)
        if sprint.status != "pending":
            raise EngineError(f"sprint {sprint_id} is {sprint.status}, not pending")
        if worker_limit < 1:
            raise EngineError("worker_limit must be >= 1")
        objective = objective or self.objective_for(sprint.thread_id)
        space = self.sprint_space(sprint)
        self._emit(sprint.thread_id, "sprint-started", {"sprint_id": sprint.id, "worker_limit": worker_limit})

        def on_start(trial: Trial) -> None:
            self._emit(
                sprint.thread_id,
                "trial-started",
                {
                    "sprint_id": sprint.id,
                    "trial": {
                        "id": trial.id,
                        "point": trial.point.to_json(),
                        "provenance": trial.provenance.to_json(),
                        "seed": trial.seed,
                    },
                },
            )

        def on_finish(trial: Trial) -> None:
            self._emit(sprint.thread_id, "trial-finished", {"sprint_id": sprint.id, "trial": trial.to_json()})

        executed_from = len(sprint.trials)
        if sprint.sampler == "gp":
            known = [
                (t.point, t.final_score)
                for t in sprint.trials
                if t.status is TrialStatus.COMPLETE and t.final_score is not None
            ]
            gp_minimize(
                objective,
                space,
                n_calls=sprint.n_calls,
                n_random=sprint.n_random,
                hedge_seed=sprint.seed,
                fidelity=sprint.fidelity,
                initial_points=list(sprint.primed_queue),
                known_observations=known,
                id_offset=len(sprint.trials),
                reporter_factory=lambda trial: self._make_reporter(sprint, trial),
                on_trial_start=on_start,
                on_trial_finish=on_finish,
                worker_limit=worker_limit,
            )
        else:
            self._run_tpe(sprint, space, objective, on_start, on_finish)

        executed = self.sprint(sprint.id).trials[executed_from:]
        n_failed = sum(1 for t in executed if t.status is TrialStatus.FAILED)
        status = "failed" if executed and n_failed / len(executed) > 0.5 else "complete"
        final = self.sprint(sprint.id)
        best = incumbent(final.trials)
        self._emit(
            sprint.thread_id,
            "sprint-finished",
            {"sprint_id": sprint.id, "status": status, "best_trial_id": None if best is None else best.id},
        )
        self.store.write_snapshot(f"sprint-{sprint.id}", self.sprint_snapshot(sprint.id))
        return SprintResult(trials=list(final.trials), best_trial=best)

    def _run_tpe(
        self,
        sprint: Sprint,
        space: SearchSpace,
        objective: ObjectiveHandle,
        on_start: Callable[[Trial], None],
        on_finish: Callable[[Trial], None],
    ) -> None:
        config = sprint.tpe if sprint.tpe is not None else TPEConfig()
        frozen_only = not space.active_dimensions
        next_id = len(sprint.trials)
        for i in range(sprint.n_calls):
            if i < len(sprint.primed_queue):
                point, provenance = sprint.primed_queue[i]
            else:
                provenance = Provenance()
                if frozen_only:
                    point = HPoint({d.name: d.frozen_value for d in space.dimensions})
                else:
                    point = tpe_suggest(sprint.trials, space, config, [sprint.seed, 5, i])
            trial = Trial(
                id=next_id + i,
                point=point,
                status=TrialStatus.RUNNING,
                provenance=provenance,
                seed=sprint.seed * 100003 + i,
            )
            on_start(trial)
            reporter = self._make_reporter(sprint, trial)
            try:
                score = objective.evaluate(point, sprint.fidelity, trial.seed, reporter)
                trial.final_score = float(score)
                trial.status = TrialStatus.COMPLETE
            except TrialPruned:
                trial.status = TrialStatus.PRUNED
            except Exception as exc:
                trial.status = TrialStatus.FAILED
                trial.error = f"{type(exc).__name__}: {exc}"
            on_finish(trial)

    # --- three-phase flow -----------------------------------------------------
    def run_three_phase(
        self,
        thread_id: str,
        seed: int = 0,
        config: "ThreePhaseConfig | None" = None,
        objective: ObjectiveHandle | None = None,
        worker_limit: int = 1,
    ) -> "PhaseReport":
        """Coarse GP exploration at low fidelity, GP refinement on the pruned
        space with the scheduler on, then a cold-primed TPE+Hyperband polish
        at full fidelity."""
        cfg = config or ThreePhaseConfig()
        thread = self.thread(thread_id)
        objective = objective or self.objective_for(thread_id)
        base = self.space(thread_id)
        warmup_dim = next((d for d in base.dimensions if d.name == cfg.warmup_dim_name), None)

        # phase 1: scheduler off makes warmup irrelevant, so freeze it
        if warmup_dim is not None and not warmup_dim.is_frozen:
            self._register_space(thread_id, freeze_dimension(base, warmup_dim.name, cfg.warmup_freeze_value))
        sp1 = self.create_sprint(
            thread_id,
            sampler="gp",
            fidelity=cfg.phase1_fidelity,
            n_calls=cfg.phase1_calls,
            n_random=cfg.phase1_random,
            seed=seed,
            suffix="phase1-v1",
        )
        self.run_sprint(sp1.id, objective, worker_limit=worker_limit)

        pruned = self.prune_space(sp1.id, k=cfg.prune_keep, margins=cfg.margins)
        if warmup_dim is not None:
            lo = max(warmup_dim.low, cfg.warmup_bounds[0])
            hi = min(warmup_dim.high, cfg.warmup_bounds[1])
            pruned = self._register_space(thread_id, unfreeze_dimension(pruned, warmup_dim.name, low=lo, high=hi))

        sp2 = self.create_sprint(
            thread_id,
            sampler="gp",
            fidelity=cfg.phase2_fidelity,
            n_calls=cfg.phase2_calls,
            n_random=cfg.phase2_random,
            seed=seed + 1,
            suffix="phase2-v1",
        )
        self.run_sprint(sp2.id, objective, worker_limit=worker_limit)

        sp3 = self.create_sprint(
            thread_id,
            sampler="tpe",
            pruner="hyperband",
            fidelity=cfg.phase3_fidelity,
            n_calls=cfg.phase3_calls,
            n_random=0,
            seed=seed + 2,
            suffix="phase3-v1",
            # startup must not exceed the primed count or the sampler never
            # conditions on history within this short sprint
            tpe_config=TPEConfig(n_startup=cfg.phase3_primed),
        )
        self.cold_prime(sp3.id, sp2.id, cfg.phase3_primed)
        self.run_sprint(sp3.id, objective, worker_limit=worker_limit)

        phases = []
        for phase, sid in enumerate((sp1.id, sp2.id, sp3.id), start=1):
            sprint = self.sprint(sid)
            best = incumbent(sprint.trials)
            phases.append(
                {
                    "phase": phase,
                    "sprint_id": sid,
                    "sprint_name": sprint.name,
                    "space_version": sprint.space_version,
                    "status": sprint.status,
                    "n_trials": len(sprint.trials),
                    "incumbent": None
                    if best is None
                    else {"trial_id": best.id, "point": best.point.to_json(), "score": best.final_score},
                }
            )
        return PhaseReport(thread_id=thread_id, seed=seed, phases=phases)


@dataclass(frozen=True)
class ThreePhaseConfig:
    phase1_calls: int = 120
    phase1_random: int = 60
    phase1_fidelity: FidelitySpec = FidelitySpec(
        train_fraction_denominator=6, val_fraction_denominator=3, max_epochs=1, scheduler_enabled=False
    )
    prune_keep: int = 10
    margins: MarginPolicy = MarginPolicy()
    phase2_calls: int = 90
    phase2_random: int = 30
    phase2_fidelity: FidelitySpec = FidelitySpec(
        train_fraction_denominator=6,
        val_fraction_denominator=3,
        max_epochs=25,
        scheduler_enabled=True,
        early_stop="end_of_warmup",
    )
    phase3_calls: int = 9
    phase3_primed: int = 3
    phase3_fidelity: FidelitySpec = FidelitySpec(
        train_fraction_denominator=1,
        val_fraction_denominator=1,
        max_epochs=25,
        scheduler_enabled=True,
        calibration_epochs=7,
    )
    warmup_dim_name: str = "lr_warmup"
    warmup_freeze_value: int = 7
    warmup_bounds: tuple[int, int] = (6, 8)


@dataclass
class PhaseReport:
    thread_id: str
    seed: int
    phases: list[dict[str, Any]]

    def to_json(self) -> dict[str, Any]:
        return {"thread_id": self.thread_id, "seed": self.seed, "phases": self.phases}

    def incumbent_of(self, phase: int) -> dict[str, Any] | None:
        return self.phases[phase - 1]["incumbent"]
